#ifndef CAC_CLASSIFIERS_HPP
#define CAC_CLASSIFIERS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cac/types.hpp"

#include <json.hpp>

namespace cac {

enum class ClassifierKind { LogReg, Ridge, Perceptron, Knn };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& name);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::LogReg;
    double learning_rate = 0.1;
    double l2_penalty = 1e-4;
    int epochs = 500;
    int k_neighbors = 5;
    double ridge_lambda = 1.0;

    void validate() const;
};

/// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before taking logs.
inline constexpr double kProbFloor = 1e-7;

/// A trained binary classifier. Linear kinds keep weights of length d + 1 with the
/// bias last; knn keeps its training set. A classifier trained on a single class
/// is constant.
struct TrainedClassifier {
    ClassifierKind kind = ClassifierKind::LogReg;
    Vector weights;
    Matrix train_features;
    IndexVector train_labels;
    int k_neighbors = 0;
    std::optional<int> constant_label;
    double training_loss = 0.0;

    int dims() const;
};

/// Mean log-loss (plus l2/2 * ||w||^2 on the non-bias weights) and its gradient.
struct LogRegObjective {
    double value = 0.0;
    Vector gradient;
};

/// Objective used by train_logreg; probabilities are not clamped here.
LogRegObjective logreg_objective(const Matrix& x, const IndexVector& y, const Vector& beta, double l2);

/// Summed log-loss with clamped probabilities.
double log_loss(const Matrix& x, const IndexVector& y, const Vector& beta);

/// Full-batch gradient descent from beta = 0; the step is halved whenever it would
/// increase the objective.
TrainedClassifier train_logreg(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec);
TrainedClassifier train_ridge(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec);
TrainedClassifier train_perceptron(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec);
TrainedClassifier train_knn(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec);

/// Dispatches on spec.kind. Single-class data yields a constant classifier.
TrainedClassifier train_classifier(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec);

/// Probability of class 1.
double predict_proba(const TrainedClassifier& clf, const Eigen::Ref<const RowVector>& x);

/// Linear score beta . [x, 1] for linear kinds.
double linear_score(const TrainedClassifier& clf, const Eigen::Ref<const RowVector>& x);

/// Log-loss sandwich for a linear score. `beta` has length d (no bias) or d + 1
/// (bias last, applied to an implicit constant feature).
struct LogLossBounds {
    double lower = 0.0;
    double upper = 0.0;
    double actual = 0.0;
    /// max_i |beta . x_i|
    double c = 0.0;
};

LogLossBounds logloss_bounds(const Matrix& x, const IndexVector& y, const Vector& beta);

/// One classifier per cluster, trained only on that cluster's rows.
std::vector<TrainedClassifier> train_per_cluster(const Matrix& data, const IndexVector& labels,
                                                 const IndexVector& assignments, int k,
                                                 const ClassifierSpec& spec);

nlohmann::json to_json(const TrainedClassifier& clf);
TrainedClassifier classifier_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ClassifierSpec& spec);

}  // namespace cac

#endif  // CAC_CLASSIFIERS_HPP
