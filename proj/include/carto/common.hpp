#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace carto {

// Error taxonomy. The CLI maps each class onto a distinct exit code.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class MissingArtifact : public std::runtime_error {
  public:
    MissingArtifact(const std::string& path, std::string producer)
        : std::runtime_error("missing artifact '" + path + "' (run the '" + producer +
                             "' subcommand first)"),
          producer_(std::move(producer)) {}

    const std::string& producer() const noexcept { return producer_; }

  private:
    std::string producer_;
};

struct YearRange {
    int first = 1970;
    int last = 2020;

    bool contains(int year) const noexcept { return year >= first && year <= last; }
    std::size_t size() const noexcept {
        return last >= first ? static_cast<std::size_t>(last - first + 1) : 0;
    }
};

/// Year-indexed values over a contiguous range. Missing values are gaps
/// (std::nullopt); `errors`, when non-empty, runs parallel to `values`.
struct TemporalSeries {
    int first_year = 0;
    std::vector<std::optional<double>> values;
    std::vector<std::optional<double>> errors;

    TemporalSeries() = default;
    explicit TemporalSeries(YearRange range, bool with_errors = false)
        : first_year(range.first), values(range.size()) {
        if (with_errors) errors.resize(range.size());
    }

    int last_year() const noexcept { return first_year + static_cast<int>(values.size()) - 1; }
    YearRange range() const noexcept { return {first_year, last_year()}; }

    std::optional<double>& operator[](int year) {
        return values.at(static_cast<std::size_t>(year - first_year));
    }
    std::optional<double> at(int year) const {
        if (year < first_year || year > last_year()) return std::nullopt;
        return values[static_cast<std::size_t>(year - first_year)];
    }
};

/// Mean with standard error stdev/sqrt(n), using the population standard
/// deviation. Empty input yields nullopt.
struct MeanError {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};
std::optional<MeanError> mean_and_stderr(std::span<const double> values);

/// Linear-interpolation quantile (the common "type 7" estimator) of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

// --- random numbers -------------------------------------------------------
//
// std::mt19937_64 has a standardized output sequence; the distributions in
// <random> do not, so the ones needed here are implemented on top of it.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }
    double normal(double mean = 0.0, double sigma = 1.0);
    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
    std::optional<double> spare_normal_;
};

// --- threading ------------------------------------------------------------

/// Number of workers used by parallel loops; 0 selects hardware concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write only to
/// slot i, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// --- text helpers ---------------------------------------------------------

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace carto
