#include "cac/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cac/io.hpp"

namespace cac {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorCode::DimensionMismatch, "score and label counts differ");
}

IndexVector order_by_score_desc(const std::vector<double>& scores) {
    IndexVector order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double auc(const std::vector<double>& scores, const IndexVector& labels) {
    check_sizes(scores.size(), labels.size());
    const auto n = static_cast<int>(scores.size());
    IndexVector order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

    double n_pos = 0.0, rank_sum = 0.0;
    for (int start = 0; start < n;) {
        int end = start;
        while (end < n && scores[order[end]] == scores[order[start]]) ++end;
        const double mid_rank = 0.5 * (start + 1 + end);  // mean of ranks start+1..end
        for (int r = start; r < end; ++r) {
            if (labels[order[r]] == 1) {
                rank_sum += mid_rank;
                n_pos += 1.0;
            }
        }
        start = end;
    }
    const double n_neg = n - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) throw Error(ErrorCode::OneClassOnly, "AUC needs both classes");
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double auprc(const std::vector<double>& scores, const IndexVector& labels) {
    check_sizes(scores.size(), labels.size());
    const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    if (total_pos == 0.0) throw Error(ErrorCode::NoPositives, "AUPRC needs at least one positive");
    const IndexVector order = order_by_score_desc(scores);
    const auto n = static_cast<int>(order.size());
    double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (int start = 0; start < n;) {
        int end = start;
        while (end < n && scores[order[end]] == scores[order[start]]) {
            (labels[order[end]] == 1 ? tp : fp) += 1.0;
            ++end;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / (tp + fp));
        prev_recall = recall;
        start = end;
    }
    return ap;
}

std::vector<std::vector<int>> confusion_counts(const IndexVector& predicted, const IndexVector& labels,
                                               int n_classes) {
    check_sizes(predicted.size(), labels.size());
    std::vector<std::vector<int>> counts(n_classes, std::vector<int>(n_classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes) {
            throw Error(ErrorCode::InvalidSpec, "label out of range");
        }
        ++counts[labels[i]][predicted[i]];
    }
    return counts;
}

double f1_score(const IndexVector& predicted, const IndexVector& labels, int n_classes) {
    const auto counts = confusion_counts(predicted, labels, n_classes);
    auto class_f1 = [&](int c) {
        double tp = counts[c][c], fp = 0.0, fn = 0.0;
        for (int o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += counts[o][c];
            fn += counts[c][o];
        }
        const double denom = 2.0 * tp + fp + fn;
        return tp > 0.0 ? 2.0 * tp / denom : 0.0;
    };
    if (n_classes == 2) return class_f1(1);
    double sum = 0.0;
    for (int c = 0; c < n_classes; ++c) sum += class_f1(c);
    return sum / n_classes;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["dataset"] = dataset;
    doc["method"] = method;
    doc["k"] = k;
    doc["seed"] = seed;
    doc["alpha"] = alpha ? nlohmann::ordered_json(*alpha) : nlohmann::ordered_json();
    doc["auc"] = auc;
    doc["auprc"] = auprc;
    doc["f1"] = f1;
    doc["n_test"] = n_test;
    doc["averaging"] = averaging;
    doc["class_counts"] = class_counts;
    doc["predicted_counts"] = predicted_counts;
    doc["silhouette"] = silhouette ? nlohmann::ordered_json(*silhouette) : nlohmann::ordered_json();
    return doc;
}

EvalReport EvalReport::from_json(const nlohmann::json& doc) {
    static const char* required[] = {"dataset", "method", "k", "seed", "auc", "auprc", "f1", "n_test"};
    for (const char* key : required) {
        if (!doc.contains(key)) throw Error(ErrorCode::SchemaMismatch, std::string("report lacks '") + key + "'");
    }
    EvalReport r;
    r.dataset = doc.at("dataset").get<std::string>();
    r.method = doc.at("method").get<std::string>();
    r.k = doc.at("k").get<int>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("alpha") && !doc.at("alpha").is_null()) r.alpha = doc.at("alpha").get<double>();
    r.auc = doc.at("auc").get<double>();
    r.auprc = doc.at("auprc").get<double>();
    r.f1 = doc.at("f1").get<double>();
    r.n_test = doc.at("n_test").get<int>();
    r.averaging = doc.value("averaging", std::string("binary"));
    r.class_counts = doc.value("class_counts", std::vector<int>{});
    r.predicted_counts = doc.value("predicted_counts", std::vector<int>{});
    if (doc.contains("silhouette") && !doc.at("silhouette").is_null()) {
        r.silhouette = doc.at("silhouette").get<double>();
    }
    return r;
}

std::string EvalReport::csv_header() {
    return "dataset,method,k,seed,alpha,auc,auprc,f1,n_test,silhouette";
}

std::string EvalReport::csv_row() const {
    std::ostringstream out;
    out << dataset << ',' << method << ',' << k << ',' << seed << ',' << (alpha ? format_real(*alpha) : "")
        << ',' << format_real(auc) << ',' << format_real(auprc) << ',' << format_real(f1) << ',' << n_test
        << ',' << (silhouette ? format_real(*silhouette) : "");
    return out.str();
}

EvalReport evaluate_binary(const std::vector<double>& scores, const IndexVector& labels) {
    check_sizes(scores.size(), labels.size());
    EvalReport r;
    r.auc = auc(scores, labels);
    r.auprc = auprc(scores, labels);
    IndexVector predicted(scores.size());
    std::transform(scores.begin(), scores.end(), predicted.begin(), label_from_score);
    r.f1 = f1_score(predicted, labels, 2);
    r.n_test = static_cast<int>(labels.size());
    r.averaging = "binary";
    r.class_counts = {static_cast<int>(std::count(labels.begin(), labels.end(), 0)),
                      static_cast<int>(std::count(labels.begin(), labels.end(), 1))};
    r.predicted_counts = {static_cast<int>(std::count(predicted.begin(), predicted.end(), 0)),
                          static_cast<int>(std::count(predicted.begin(), predicted.end(), 1))};
    return r;
}

EvalReport evaluate_multiclass(const Matrix& probabilities, const IndexVector& labels, int n_classes) {
    if (probabilities.rows() != static_cast<Eigen::Index>(labels.size()) || probabilities.cols() != n_classes) {
        throw Error(ErrorCode::DimensionMismatch, "probability matrix shape");
    }
    if (n_classes == 2) {
        std::vector<double> scores(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) scores[i] = probabilities(static_cast<Eigen::Index>(i), 1);
        return evaluate_binary(scores, labels);
    }
    EvalReport r;
    r.averaging = "macro-ovr";
    r.n_test = static_cast<int>(labels.size());
    IndexVector predicted(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Eigen::Index arg = 0;
        probabilities.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        predicted[i] = static_cast<int>(arg);
    }
    double auc_sum = 0.0, ap_sum = 0.0;
    int used = 0;
    r.class_counts.assign(n_classes, 0);
    r.predicted_counts.assign(n_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++r.class_counts.at(labels[i]);
        ++r.predicted_counts[predicted[i]];
    }
    for (int c = 0; c < n_classes; ++c) {
        if (r.class_counts[c] == 0 || r.class_counts[c] == r.n_test) continue;
        std::vector<double> scores(labels.size());
        IndexVector binary(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probabilities(static_cast<Eigen::Index>(i), c);
            binary[i] = labels[i] == c ? 1 : 0;
        }
        auc_sum += auc(scores, binary);
        ap_sum += auprc(scores, binary);
        ++used;
    }
    if (used == 0) throw Error(ErrorCode::OneClassOnly, "need at least two classes present");
    r.auc = auc_sum / used;
    r.auprc = ap_sum / used;
    r.f1 = f1_score(predicted, labels, n_classes);
    return r;
}

}  // namespace cac
