#include "spinboson/model.hpp"

#include "spinboson/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spinboson {

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::LinearSpinBoson ? "linear" : "two_photon";
}

std::string_view to_string(ParitySector sector) noexcept {
    return sector == ParitySector::Plus ? "plus" : "minus";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
    if (text == "linear") return ModelKind::LinearSpinBoson;
    if (text == "two_photon") return ModelKind::TwoPhotonSpinBoson;
    return std::nullopt;
}

std::optional<ParitySector> parse_sector(std::string_view text) noexcept {
    if (text == "plus" || text == "+") return ParitySector::Plus;
    if (text == "minus" || text == "-") return ParitySector::Minus;
    return std::nullopt;
}

double ModelParams::max_ratio() const noexcept {
    return ratios_.empty() ? 0.0 : *std::max_element(ratios_.begin(), ratios_.end());
}

RawParams ModelParams::raw() const {
    return RawParams{omegas_, couplings_, delta_, kind_};
}

ModelParams validate(const RawParams& raw) {
    if (raw.omegas.empty()) {
        throw ValidationError("at least one bosonic mode is required");
    }
    if (raw.omegas.size() != raw.couplings.size()) {
        throw ValidationError("length mismatch: " + std::to_string(raw.omegas.size()) +
                              " frequencies but " + std::to_string(raw.couplings.size()) +
                              " couplings");
    }
    for (std::size_t j = 0; j < raw.omegas.size(); ++j) {
        const int idx = static_cast<int>(j);
        if (!std::isfinite(raw.omegas[j]) || raw.omegas[j] <= 0.0) {
            throw ValidationError("non-positive frequency at index " + std::to_string(j), idx);
        }
        if (!std::isfinite(raw.couplings[j]) || raw.couplings[j] < 0.0) {
            throw ValidationError("negative coupling at index " + std::to_string(j), idx);
        }
    }
    if (!std::isfinite(raw.delta)) {
        throw ValidationError("delta must be finite");
    }

    ModelParams p;
    p.omegas_ = raw.omegas;
    p.couplings_ = raw.couplings;
    p.delta_ = raw.delta;
    p.kind_ = raw.kind;
    p.ratios_.resize(raw.omegas.size());
    for (std::size_t j = 0; j < raw.omegas.size(); ++j) {
        p.ratios_[j] = raw.couplings[j] / raw.omegas[j];
    }
    return p;
}

ModelParams validate(const ModelParams& params) { return validate(params.raw()); }

double x_shift(const ModelParams& params) {
    if (params.kind() != ModelKind::LinearSpinBoson) {
        throw ValidationError("x_shift is defined for the linear spin-boson model only");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < params.n_modes(); ++j) {
        s += params.couplings()[j] * params.couplings()[j] / params.omegas()[j];
    }
    return s;
}

double energy_from_x(const ModelParams& params, double x) { return x - x_shift(params); }

double x_from_energy(const ModelParams& params, double energy) {
    return energy + x_shift(params);
}

// ---------------------------------------------------------------------------

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
    for (int e : entries_) {
        if (e < 0) throw ValidationError("multi-index entries must be non-negative");
    }
    level_ = std::accumulate(entries_.begin(), entries_.end(), 0);
}

MultiIndex MultiIndex::zero(std::size_t n_modes) {
    return MultiIndex(std::vector<int>(n_modes, 0));
}

MultiIndex MultiIndex::plus_unit(std::size_t j) const {
    MultiIndex out = *this;
    ++out.entries_.at(j);
    ++out.level_;
    return out;
}

std::optional<MultiIndex> MultiIndex::minus_unit(std::size_t j) const {
    if (entries_.at(j) == 0) return std::nullopt;
    MultiIndex out = *this;
    --out.entries_[j];
    --out.level_;
    return out;
}

bool MultiIndex::has_zero_entry() const noexcept {
    return std::find(entries_.begin(), entries_.end(), 0) != entries_.end();
}

double MultiIndex::dot(std::span<const double> weights) const {
    double s = 0.0;
    for (std::size_t j = 0; j < entries_.size(); ++j) s += entries_[j] * weights[j];
    return s;
}

std::string format(const MultiIndex& n) {
    std::string out = "(";
    for (std::size_t j = 0; j < n.size(); ++j) {
        if (j) out += ',';
        out += std::to_string(n[j]);
    }
    return out + ")";
}

std::uint64_t binomial(int n, int k) noexcept {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 0; i < k; ++i) {
        // exact: r * (n - i) is divisible by (i + 1)
        r = r * static_cast<std::uint64_t>(n - i) / static_cast<std::uint64_t>(i + 1);
    }
    return r;
}

std::size_t level_size(std::size_t n_modes, int p) {
    if (p < 0 || n_modes == 0) return 0;
    const int m = static_cast<int>(n_modes);
    return static_cast<std::size_t>(binomial(p + m - 1, m - 1));
}

namespace {

void enumerate_into(std::vector<int>& prefix, std::size_t slots, int remaining,
                    std::vector<MultiIndex>& out) {
    if (slots == 1) {
        prefix.push_back(remaining);
        out.emplace_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        prefix.push_back(v);
        enumerate_into(prefix, slots - 1, remaining - v, out);
        prefix.pop_back();
    }
}

} // namespace

std::vector<MultiIndex> enumerate_level(std::size_t n_modes, int p) {
    std::vector<MultiIndex> out;
    if (n_modes == 0 || p < 0) return out;
    out.reserve(level_size(n_modes, p));
    std::vector<int> prefix;
    prefix.reserve(n_modes);
    enumerate_into(prefix, n_modes, p, out);
    return out;
}

std::size_t level_rank(std::span<const int> entries) {
    const std::size_t n = entries.size();
    int remaining = std::accumulate(entries.begin(), entries.end(), 0);
    std::size_t rank = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t slots_after = n - i - 1;
        for (int u = 0; u < entries[i]; ++u) {
            rank += level_size(slots_after, remaining - u);
        }
        remaining -= entries[i];
    }
    return rank;
}

std::size_t level_rank(const MultiIndex& n) { return level_rank(n.entries()); }

double GradedSeries::at(const MultiIndex& n) const {
    if (n.size() != n_modes || n.level() > max_level()) return 0.0;
    return by_level[static_cast<std::size_t>(n.level())][level_rank(n)];
}

} // namespace spinboson
