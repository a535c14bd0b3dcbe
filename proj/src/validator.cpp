#include "carto/validator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace carto {

std::vector<std::optional<std::string>> subfield_labels(const Corpus& corpus, const PointTable& space) {
    std::vector<std::optional<std::string>> out(space.size());
    for (std::size_t r = 0; r < space.size(); ++r) {
        const auto row = corpus.find(space.id(r));
        if (!row) continue;
        const auto& topic = corpus.paper(*row).topic;
        if (topic && !topic->subfield_id.empty()) out[r] = topic->subfield_id;
    }
    return out;
}

namespace {

// Rows kept by the population threshold, their label ids and the names.
struct Filtered {
    std::vector<std::size_t> rows;
    std::vector<int> labels;
    std::vector<std::string> names;
};

Filtered filter_labels(std::span<const std::optional<std::string>> labels, std::size_t threshold) {
    std::map<std::string, std::size_t> population;
    for (const auto& l : labels) {
        if (l) ++population[*l];
    }
    Filtered f;
    std::map<std::string, int> id;
    for (const auto& [name, count] : population) {
        if (count >= threshold) {
            id.emplace(name, static_cast<int>(f.names.size()));
            f.names.push_back(name);
        }
    }
    f.labels.assign(labels.size(), -1);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (!labels[r]) continue;
        if (auto it = id.find(*labels[r]); it != id.end()) {
            f.labels[r] = it->second;
            f.rows.push_back(r);
        }
    }
    return f;
}

}  // namespace

LabeledSplit make_split(std::span<const std::optional<std::string>> labels, std::size_t threshold,
                        double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("make_split: train fraction must lie in (0, 1)");
    }
    auto f = filter_labels(labels, threshold);
    Rng rng(seed);
    rng.shuffle(f.rows);
    const auto n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(f.rows.size())));
    if (n_train == 0 || n_train >= f.rows.size()) {
        throw std::invalid_argument("make_split: " + std::to_string(f.rows.size()) +
                                    " labelled rows leave one side of the split empty");
    }
    LabeledSplit s;
    s.train.assign(f.rows.begin(), f.rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(f.rows.begin() + static_cast<std::ptrdiff_t>(n_train), f.rows.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    s.labels = std::move(f.labels);
    s.label_names = std::move(f.names);
    s.threshold = threshold;
    return s;
}

std::vector<LabeledSplit> make_folds(std::span<const std::optional<std::string>> labels, std::size_t threshold,
                                     std::size_t folds, std::uint64_t seed) {
    auto f = filter_labels(labels, threshold);
    if (folds < 2 || folds > f.rows.size()) throw std::invalid_argument("make_folds: bad fold count");
    Rng rng(seed);
    rng.shuffle(f.rows);
    std::vector<LabeledSplit> out(folds);
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        for (std::size_t k = 0; k < folds; ++k) (i % folds == k ? out[k].test : out[k].train).push_back(f.rows[i]);
    }
    for (auto& s : out) {
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.test.begin(), s.test.end());
        s.labels = f.labels;
        s.label_names = f.names;
        s.threshold = threshold;
    }
    return out;
}

namespace {

struct Vote {
    std::size_t count = 0;
    std::size_t exact = 0;  // neighbours at distance zero
    double inverse = 0.0;   // summed 1/d over the others
};

bool beats(const Vote& a, const Vote& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.exact != b.exact) return a.exact > b.exact;
    return a.inverse > b.inverse;
}

}  // namespace

std::vector<std::vector<int>> knn_predictions(const PointTable& space, const LabeledSplit& split,
                                              std::span<const std::size_t> ks) {
    if (ks.empty()) throw std::invalid_argument("knn_predictions: no k values");
    for (auto k : ks) {
        if (k == 0 || k >= split.train.size()) {
            throw std::invalid_argument("knn_predictions: k = " + std::to_string(k) + " outside [1, " +
                                        std::to_string(split.train.size()) + ")");
        }
    }
    const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
    const KnnIndex index(space, split.train);
    const std::size_t n_labels = split.label_names.size();

    std::vector<std::vector<int>> predictions(ks.size(), std::vector<int>(split.test.size(), -1));
    parallel_for(split.test.size(), [&](std::size_t t) {
        const auto neighbors = index.query(space.row(split.test[t]), k_max);
        std::vector<Vote> votes(n_labels);
        std::size_t used = 0;
        // Walk ks in ascending order while extending the vote prefix.
        std::vector<std::size_t> order(ks.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ks[a] < ks[b]; });
        for (auto idx : order) {
            for (; used < ks[idx]; ++used) {
                const auto& nb = neighbors[used];
                auto& v = votes[static_cast<std::size_t>(split.labels[nb.row])];
                ++v.count;
                if (nb.distance == 0.0) {
                    ++v.exact;
                } else {
                    v.inverse += 1.0 / nb.distance;
                }
            }
            int best = -1;
            for (std::size_t l = 0; l < n_labels; ++l) {
                if (votes[l].count == 0) continue;
                if (best < 0 || beats(votes[l], votes[static_cast<std::size_t>(best)])) best = static_cast<int>(l);
            }
            predictions[idx][t] = best;
        }
    });
    return predictions;
}

AccuracySweep knn_accuracy_sweep(const PointTable& space, const LabeledSplit& split,
                                 std::span<const std::size_t> ks) {
    if (split.test.empty()) throw std::invalid_argument("knn_accuracy_sweep: empty test set");
    const auto predictions = knn_predictions(space, split, ks);
    AccuracySweep sweep;
    sweep.ks.assign(ks.begin(), ks.end());
    double best = -1.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        std::size_t correct = 0;
        for (std::size_t t = 0; t < split.test.size(); ++t) {
            if (predictions[i][t] == split.labels[split.test[t]]) ++correct;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(split.test.size());
        sweep.accuracy.push_back(acc);
        if (acc > best || (acc == best && ks[i] < sweep.k_star)) {
            best = acc;
            sweep.k_star = ks[i];
        }
    }
    return sweep;
}

double ConfusionMatrix::accuracy() const {
    double correct = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t j = 0; j < size(); ++j) {
            total += counts[i * size() + j];
            if (i == j) correct += counts[i * size() + j];
        }
    }
    return total > 0.0 ? correct / total : 0.0;
}

ConfusionMatrix confusion_matrix(const PointTable& space, const LabeledSplit& split, std::size_t k) {
    const std::size_t ks[] = {k};
    const auto predicted = knn_predictions(space, split, ks).front();
    ConfusionMatrix m;
    m.labels = split.label_names;
    const std::size_t n = m.labels.size();
    m.counts.assign(n * n, 0.0);
    m.normalized.assign(n * n, 0.0);
    m.empty_row.assign(n, false);
    for (std::size_t t = 0; t < split.test.size(); ++t) {
        const auto observed = static_cast<std::size_t>(split.labels[split.test[t]]);
        m.counts[observed * n + static_cast<std::size_t>(predicted[t])] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += m.counts[i * n + j];
        if (sum == 0.0) {
            m.empty_row[i] = true;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) m.normalized[i * n + j] = m.counts[i * n + j] / sum;
    }
    return m;
}

void write_accuracy_csv(const std::filesystem::path& path, const AccuracySweep& sweep) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "k,accuracy\n";
    for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
        out << sweep.ks[i] << ',' << fmt::format("{}", sweep.accuracy[i]) << '\n';
    }
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "observed";
    for (const auto& l : matrix.labels) out << ',' << l;
    out << ",empty_row\n";
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.labels[i];
        for (std::size_t j = 0; j < matrix.size(); ++j) out << ',' << fmt::format("{}", matrix.at(i, j));
        out << ',' << (matrix.empty_row[i] ? 1 : 0) << '\n';
    }
}

}  // namespace carto
