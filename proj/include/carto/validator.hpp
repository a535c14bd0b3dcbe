#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carto/atlas.hpp"
#include "carto/corpus.hpp"

namespace carto {

/// Train fractions used for the embedding space and for the 2-D map.
inline constexpr double kHighDimTrainFraction = 0.99;
inline constexpr double kMapTrainFraction = 0.8;

/// Rows of a PointTable split into train and test sets. Labels are indices
/// into `label_names` (sorted); rows outside both sets carry -1.
struct LabeledSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<int> labels;
    std::vector<std::string> label_names;
    std::size_t threshold = 0;
};

/// Subfield of each table row (empty for papers without a topic or outside
/// the corpus).
std::vector<std::optional<std::string>> subfield_labels(const Corpus& corpus, const PointTable& space);

/// Keeps rows whose label has at least `threshold` members, shuffles them with
/// `seed` and puts the first `train_fraction` into the training set.
/// Throws std::invalid_argument for a fraction outside (0, 1) or an empty side.
LabeledSplit make_split(std::span<const std::optional<std::string>> labels, std::size_t threshold,
                        double train_fraction, std::uint64_t seed);

/// `folds` splits over the same filtered rows, each fold serving once as test set.
std::vector<LabeledSplit> make_folds(std::span<const std::optional<std::string>> labels, std::size_t threshold,
                                     std::size_t folds, std::uint64_t seed);

struct AccuracySweep {
    std::vector<std::size_t> ks;
    std::vector<double> accuracy;
    std::size_t k_star = 0;  // first k reaching the maximum
};

/// Majority vote of the k nearest training points; ties go to more neighbours
/// at distance zero, then the larger summed inverse distance, then the smaller
/// label. Returns one prediction per test point for every k.
std::vector<std::vector<int>> knn_predictions(const PointTable& space, const LabeledSplit& split,
                                              std::span<const std::size_t> ks);

/// Throws std::invalid_argument unless every k lies in [1, train size).
AccuracySweep knn_accuracy_sweep(const PointTable& space, const LabeledSplit& split,
                                 std::span<const std::size_t> ks);

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<double> counts;      // row-major, observed x predicted
    std::vector<double> normalized;  // rows sum to one unless flagged
    std::vector<bool> empty_row;

    std::size_t size() const noexcept { return labels.size(); }
    double at(std::size_t i, std::size_t j) const { return normalized[i * labels.size() + j]; }
    /// Share of correctly predicted test points.
    double accuracy() const;
};

ConfusionMatrix confusion_matrix(const PointTable& space, const LabeledSplit& split, std::size_t k);

void write_accuracy_csv(const std::filesystem::path& path, const AccuracySweep& sweep);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix);

}  // namespace carto
