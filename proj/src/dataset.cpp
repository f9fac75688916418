#include "cac/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cac/io.hpp"

namespace cac {

namespace {

using Row = std::vector<std::string>;

// RFC-4180 style: quoted fields, doubled quotes, CRLF or LF line endings.
std::vector<Row> parse_records(const std::string& text) {
    std::vector<Row> records;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) records.push_back(row);
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else if (c == '\n') {
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw Error(ErrorCode::ParseError, "unterminated quoted field");
    if (!field.empty() || !row.empty()) end_row();
    return records;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& raw, int row, int col) {
    const std::string s = trim(raw);
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " +
                                               std::to_string(col) + ": '" + raw + "'");
    }
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteValue,
                    "row " + std::to_string(row) + ", column " + std::to_string(col));
    }
    return v;
}

// Generates the dataset and, optionally, each row's natural cluster.
LabeledDataset generate(const SyntheticSpec& spec, IndexVector* membership) {
    const int n = spec.n_samples;
    const int d = spec.n_features;
    const int K = spec.natural_clusters;
    if (n <= 0 || d <= 0 || K <= 0 || spec.ics < 0.0 || spec.ocs < 0.0 ||
        !std::isfinite(spec.ics) || !std::isfinite(spec.ocs)) {
        throw Error(ErrorCode::InvalidSpec, "sizes must be positive and separations nonnegative");
    }
    if (4 * K > n) throw Error(ErrorCode::InvalidSpec, "natural_clusters must be <= n_samples / 4");
    if (spec.nonlinear_labels && d < 2) {
        throw Error(ErrorCode::InvalidSpec, "nonlinear labels need at least 2 features");
    }

    Rng rng(spec.seed);
    auto gaussian_matrix = [&](int rows, int cols) {
        Matrix m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = standard_normal(rng);
        return m;
    };

    const double spacing = 2.0 * spec.ocs;
    Matrix centers = Matrix::Zero(K, d);
    if (K > 1 && K - 1 <= d) {
        // Regular simplex: centered basis vectors of R^K, expressed in an orthonormal
        // basis of their (K-1)-dimensional span, then rotated randomly into R^d.
        Matrix simplex = Matrix::Identity(K, K);
        simplex.rowwise() -= simplex.colwise().mean();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(simplex.transpose()));
        Eigen::MatrixXd basis = Eigen::MatrixXd(qr.householderQ()).leftCols(K - 1);
        Matrix coords = simplex * basis;  // K x (K-1), edge length sqrt(2)
        coords *= spacing / std::sqrt(2.0);
        Eigen::HouseholderQR<Eigen::MatrixXd> rot(Eigen::MatrixXd(gaussian_matrix(d, d)));
        Eigen::MatrixXd rotation = rot.householderQ();
        centers = coords * rotation.leftCols(K - 1).transpose();
    } else if (K > 1) {
        // More clusters than the simplex fits: random centers with expected
        // pairwise distance equal to the spacing.
        centers = gaussian_matrix(K, d) * (spacing / std::sqrt(2.0 * d));
    }

    auto random_unit = [&]() {
        Vector v(d);
        do {
            for (int j = 0; j < d; ++j) v(j) = standard_normal(rng);
        } while (v.norm() < 1e-12);
        return Vector(v / v.norm());
    };
    std::vector<Vector> class_dir(K), xor_dir(K);
    for (int c = 0; c < K; ++c) {
        class_dir[c] = random_unit();
        if (spec.nonlinear_labels) {
            Vector v;
            do {
                v = random_unit();
                v -= v.dot(class_dir[c]) * class_dir[c];
            } while (v.norm() < 1e-6);
            xor_dir[c] = v / v.norm();
        }
    }

    // 2K groups (cluster, class), sizes as even as possible.
    const int groups = 2 * K;
    LabeledDataset ds;
    ds.features.resize(n, d);
    ds.labels.resize(n);
    ds.n_classes = 2;
    IndexVector member(n);
    int row = 0;
    for (int g = 0; g < groups; ++g) {
        const int size = n / groups + (g < n % groups ? 1 : 0);
        const int cluster = g / 2;
        const int label = g % 2;
        const double sign = label == 1 ? 0.5 : -0.5;
        const Vector mean = centers.row(cluster).transpose() + sign * spec.ics * class_dir[cluster];
        for (int i = 0; i < size; ++i, ++row) {
            for (int j = 0; j < d; ++j) ds.features(row, j) = mean(j) + standard_normal(rng);
            int y = label;
            if (spec.nonlinear_labels) {
                const Vector offset = ds.features.row(row).transpose() - centers.row(cluster).transpose();
                if (offset.dot(xor_dir[cluster]) > 0.0) y = 1 - y;
            }
            ds.labels[row] = y;
            member[row] = cluster;
        }
    }

    IndexVector perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    LabeledDataset out = ds.subset(perm);
    for (int j = 0; j < d; ++j) out.feature_names.push_back("x" + std::to_string(j));
    if (membership) {
        membership->resize(n);
        for (int i = 0; i < n; ++i) (*membership)[i] = member[perm[i]];
    }
    return out;
}

}  // namespace

void LabeledDataset::validate() const {
    if (features.rows() < 1) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    if (features.cols() < 1) throw Error(ErrorCode::EmptyDataset, "dataset has no feature columns");
    if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
    }
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "n_classes must be >= 2");
    if (!features.allFinite()) throw Error(ErrorCode::NonFiniteValue, "non-finite feature value");
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw Error(ErrorCode::InvalidSpec, "label out of range");
    }
}

LabeledDataset LabeledDataset::subset(const IndexVector& idx) const {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
    out.labels.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(idx[r]);
        out.labels[r] = labels[idx[r]];
    }
    out.feature_names = feature_names;
    out.class_names = class_names;
    out.n_classes = n_classes;
    return out;
}

int LabeledDataset::count_label(int label) const {
    return static_cast<int>(std::count(labels.begin(), labels.end(), label));
}

LabeledDataset parse_csv(const std::string& text, const std::string& label_column,
                         bool has_header) {
    std::vector<Row> records = parse_records(text);
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "empty CSV");
    const std::size_t width = records.front().size();

    std::size_t label_idx = width;
    Row header;
    if (has_header) {
        header = records.front();
        records.erase(records.begin());
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (trim(header[c]) == label_column) {
                label_idx = c;
                break;
            }
        }
    } else {
        std::size_t parsed = 0;
        auto [ptr, ec] = std::from_chars(label_column.data(),
                                         label_column.data() + label_column.size(), parsed);
        if (ec == std::errc{} && ptr == label_column.data() + label_column.size()) label_idx = parsed;
    }
    if (label_idx >= width) throw Error(ErrorCode::MissingColumn, "label column '" + label_column + "'");
    if (width < 2) throw Error(ErrorCode::EmptyDataset, "no feature columns besides the label");
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has no data rows");

    const int n = static_cast<int>(records.size());
    const int d = static_cast<int>(width) - 1;
    LabeledDataset ds;
    ds.features.resize(n, d);
    ds.labels.resize(n);
    std::map<std::string, int> codes;
    for (int r = 0; r < n; ++r) {
        const Row& rec = records[r];
        const int line = r + (has_header ? 2 : 1);
        if (rec.size() != width) {
            throw Error(ErrorCode::ParseError, "row " + std::to_string(line) + ": expected " +
                                                   std::to_string(width) + " fields");
        }
        int col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == label_idx) continue;
            ds.features(r, col++) = parse_real(rec[c], line, static_cast<int>(c) + 1);
        }
        const std::string key = trim(rec[label_idx]);
        auto [it, inserted] = codes.emplace(key, static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(key);
        ds.labels[r] = it->second;
    }
    for (std::size_t c = 0; c < width; ++c) {
        if (c == label_idx) continue;
        ds.feature_names.push_back(has_header ? trim(header[c]) : "x" + std::to_string(c));
    }
    ds.n_classes = std::max(2, static_cast<int>(ds.class_names.size()));
    ds.validate();
    return ds;
}

LabeledDataset load_csv(const std::string& path, const std::string& label_column, bool has_header) {
    return parse_csv(read_file(path), label_column, has_header);
}

std::string to_csv(const LabeledDataset& ds) {
    std::ostringstream out;
    for (int j = 0; j < ds.dims(); ++j) {
        out << (j < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[j]
                                                              : "x" + std::to_string(j))
            << ',';
    }
    out << "y\n";
    for (int i = 0; i < ds.rows(); ++i) {
        for (int j = 0; j < ds.dims(); ++j) out << format_real(ds.features(i, j)) << ',';
        out << ds.labels[i] << '\n';
    }
    return out.str();
}

void write_csv(const LabeledDataset& ds, const std::string& path) {
    write_file(path, to_csv(ds));
}

Standardization standardize(const LabeledDataset& ds) {
    if (ds.rows() < 2) throw Error(ErrorCode::TooFewRows, "standardize needs at least 2 rows");
    const double n = ds.rows();
    Vector mean = ds.features.colwise().mean().transpose();
    Vector std(ds.dims());
    for (int j = 0; j < ds.dims(); ++j) {
        const double var = (ds.features.col(j).array() - mean(j)).square().sum() / n;
        const double s = std::sqrt(var);
        std(j) = s < 1e-12 ? 1.0 : s;
    }
    return {apply_standardization(ds, mean, std), mean, std};
}

LabeledDataset apply_standardization(const LabeledDataset& ds, const Vector& mean, const Vector& std) {
    if (mean.size() != ds.dims() || std.size() != ds.dims()) {
        throw Error(ErrorCode::DimensionMismatch, "standardization statistics width");
    }
    LabeledDataset out = ds;
    for (int j = 0; j < ds.dims(); ++j) {
        out.features.col(j) = (ds.features.col(j).array() - mean(j)) / std(j);
    }
    return out;
}

SplitIndices split_indices(const LabeledDataset& ds, const SplitSpec& spec) {
    const double fracs[3] = {spec.train_frac, spec.val_frac, spec.test_frac};
    for (double f : fracs) {
        if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::InvalidSpec, "split fractions must lie in (0,1)");
    }
    if (std::abs(fracs[0] + fracs[1] + fracs[2] - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidSpec, "split fractions must sum to 1");
    }
    Rng rng(spec.seed);
    SplitIndices out;
    auto cut = [&](IndexVector pool) {
        shuffle(pool, rng);
        const auto m = static_cast<double>(pool.size());
        const auto n_train = static_cast<std::size_t>(std::llround(m * spec.train_frac));
        const auto n_val = std::min(pool.size() - n_train,
                                    static_cast<std::size_t>(std::llround(m * spec.val_frac)));
        out.train.insert(out.train.end(), pool.begin(), pool.begin() + n_train);
        out.val.insert(out.val.end(), pool.begin() + n_train, pool.begin() + n_train + n_val);
        out.test.insert(out.test.end(), pool.begin() + n_train + n_val, pool.end());
    };
    if (spec.stratified) {
        for (int c = 0; c < ds.n_classes; ++c) {
            IndexVector pool;
            for (int i = 0; i < ds.rows(); ++i)
                if (ds.labels[i] == c) pool.push_back(i);
            cut(std::move(pool));
        }
    } else {
        IndexVector pool(ds.rows());
        std::iota(pool.begin(), pool.end(), 0);
        cut(std::move(pool));
    }
    for (IndexVector* part : {&out.train, &out.val, &out.test}) {
        if (part->empty()) throw Error(ErrorCode::EmptySplit, "a split received no rows");
        std::sort(part->begin(), part->end());
    }
    return out;
}

DatasetSplit split(const LabeledDataset& ds, const SplitSpec& spec) {
    const SplitIndices idx = split_indices(ds, spec);
    return {ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test)};
}

LabeledDataset make_classification(const SyntheticSpec& spec) {
    return generate(spec, nullptr);
}

IndexVector natural_cluster_membership(const SyntheticSpec& spec) {
    IndexVector m;
    generate(spec, &m);
    return m;
}

}  // namespace cac
