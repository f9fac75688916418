#ifndef CAC_METRICS_HPP
#define CAC_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cac/types.hpp"

#include <json.hpp>

namespace cac {

/// P(score+ > score-) + 0.5 P(tie) over all positive/negative pairs.
double auc(const std::vector<double>& scores, const IndexVector& labels);

/// Average precision: sum over descending score thresholds of
/// (recall increment) x precision, with tied scores entering together.
double auprc(const std::vector<double>& scores, const IndexVector& labels);

/// Binary (n_classes == 2): F1 of class 1, 0 when undefined.
/// Otherwise the unweighted mean of per-class one-vs-rest F1.
double f1_score(const IndexVector& predicted, const IndexVector& labels, int n_classes);

/// counts[truth][predicted]
std::vector<std::vector<int>> confusion_counts(const IndexVector& predicted, const IndexVector& labels,
                                               int n_classes);

/// Repo-wide decision rule.
inline int label_from_score(double score) { return score >= 0.5 ? 1 : 0; }

struct EvalReport {
    std::string dataset;
    std::string method;
    int k = 1;
    std::uint64_t seed = 0;
    std::optional<double> alpha;
    double auc = 0.0;
    double auprc = 0.0;
    double f1 = 0.0;
    int n_test = 0;
    /// "binary" or "macro-ovr"
    std::string averaging = "binary";
    std::vector<int> class_counts;
    std::vector<int> predicted_counts;
    std::optional<double> silhouette;

    /// Stable field order.
    nlohmann::ordered_json to_json() const;
    static EvalReport from_json(const nlohmann::json& doc);

    static std::string csv_header();
    std::string csv_row() const;
};

/// Scores are class-1 probabilities.
EvalReport evaluate_binary(const std::vector<double>& scores, const IndexVector& labels);

/// Row i of `probabilities` holds the class distribution for sample i;
/// AUC and AUPRC are macro-averaged one-vs-rest over classes present in `labels`.
EvalReport evaluate_multiclass(const Matrix& probabilities, const IndexVector& labels, int n_classes);

}  // namespace cac

#endif  // CAC_METRICS_HPP
