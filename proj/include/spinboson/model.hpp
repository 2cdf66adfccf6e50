// model.hpp: model parameters, multi-indices and the X <-> E shift
//
// H = sum_j w_j a_j^+ a_j + sigma_x sum_k g_k (a_k^+ + a_k) + Delta sigma_z   (linear)
// H = sum_j w_j a_j^+ a_j + sigma_x sum_k g_k (a_k^+2 + a_k^2) + Delta sigma_z (two-photon)

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spinboson {

enum class ModelKind { LinearSpinBoson, TwoPhotonSpinBoson };

enum class ParitySector { Plus, Minus };

// +1 for Plus (upper sign in G^{+-}), -1 for Minus.
constexpr int sign_of(ParitySector s) noexcept { return s == ParitySector::Plus ? 1 : -1; }

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(ParitySector sector) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;
std::optional<ParitySector> parse_sector(std::string_view text) noexcept;

// Unvalidated parameter record, as read from a config file.
struct RawParams {
    std::vector<double> omegas;
    std::vector<double> couplings;
    double delta = 0.0;
    ModelKind kind = ModelKind::LinearSpinBoson;
};

// Validated physical instance. Immutable; construct through validate().
class ModelParams {
public:
    std::size_t n_modes() const noexcept { return omegas_.size(); }
    const std::vector<double>& omegas() const noexcept { return omegas_; }
    const std::vector<double>& couplings() const noexcept { return couplings_; }
    double delta() const noexcept { return delta_; }
    ModelKind kind() const noexcept { return kind_; }

    // r_j = g_j / w_j
    const std::vector<double>& ratios() const noexcept { return ratios_; }
    double max_ratio() const noexcept;

    RawParams raw() const;

    bool operator==(const ModelParams&) const = default;

private:
    friend ModelParams validate(const RawParams& raw);
    ModelParams() = default;

    std::vector<double> omegas_;
    std::vector<double> couplings_;
    double delta_ = 0.0;
    ModelKind kind_ = ModelKind::LinearSpinBoson;
    std::vector<double> ratios_;
};

// Throws ValidationError (with the offending mode index where applicable).
ModelParams validate(const RawParams& raw);
ModelParams validate(const ModelParams& params);

// sum_j g_j^2 / w_j; E = X - x_shift. Linear model only.
double x_shift(const ModelParams& params);
double energy_from_x(const ModelParams& params, double x);
double x_from_energy(const ModelParams& params, double energy);

// N-component multi-index of non-negative integers; level is the entry sum.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries);
    static MultiIndex zero(std::size_t n_modes);

    std::size_t size() const noexcept { return entries_.size(); }
    int level() const noexcept { return level_; }
    int operator[](std::size_t j) const { return entries_[j]; }
    std::span<const int> entries() const noexcept { return entries_; }

    MultiIndex plus_unit(std::size_t j) const;
    // Empty when entry j is already zero.
    std::optional<MultiIndex> minus_unit(std::size_t j) const;
    bool has_zero_entry() const noexcept;

    // n . w
    double dot(std::span<const double> weights) const;

    // Lexicographic on entries; the level is derived and never disagrees.
    bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }
    std::strong_ordering operator<=>(const MultiIndex& other) const {
        return entries_ <=> other.entries_;
    }

private:
    std::vector<int> entries_;
    int level_ = 0;
};

std::string format(const MultiIndex& n);

// Exact for the small arguments used here; saturates nothing, so keep n <= 60.
std::uint64_t binomial(int n, int k) noexcept;

// Number of multi-indices of N entries with sum p: binomial(p + N - 1, N - 1).
std::size_t level_size(std::size_t n_modes, int p);

// All multi-indices of N entries with sum p, ascending lexicographic order.
std::vector<MultiIndex> enumerate_level(std::size_t n_modes, int p);

// Position of n within enumerate_level(n.size(), n.level()).
std::size_t level_rank(const MultiIndex& n);
std::size_t level_rank(std::span<const int> entries);

// Coefficients of a power series in N variables, graded by total degree.
// by_level[p][level_rank(n)] is the coefficient of z^n.
struct GradedSeries {
    std::size_t n_modes = 0;
    std::vector<std::vector<double>> by_level;

    int max_level() const noexcept { return static_cast<int>(by_level.size()) - 1; }
    // Zero outside the stored levels.
    double at(const MultiIndex& n) const;
};

} // namespace spinboson
