// gfunction.hpp: coefficient recurrence and the G-function G_N^{+-}(X)
//
//   G_N^{+-}(X) = sum_n B_n (1 -+ Delta/(X - n.w)) (g/w)^n
//   sum_j g_j (n_j+1) B_{n+e_j} = f_n(X) B_n - sum_j g_j B_{n-e_j}
//   f_n(X) = 2 sum_j g_j^2/w_j + (n.w - X + Delta^2/(X - n.w)) / 2,   B_0 = 1
//
// Each level of the recurrence leaves one more unknown than equations (N = 2) or
// more (N >= 3). The gap is closed with permutation-symmetric ties between
// multi-indices that contain a zero entry and are permutations of each other;
// for N = 2 this is B_{(p,0)} = B_{(0,p)}.
//
// Monomials use the weights (g_j/w_j)^{n_j} together with B_n. Modes with
// g_j = 0 carry zero weight and their n_j = 0 sub-table is closed under the
// recurrence, so they are dropped before building the table. Modes sharing both
// w and g are combined into one collective mode with coupling g sqrt(copies);
// the remaining combinations are free oscillators, and on that set the tie
// closure leaves a level undetermined.

#pragma once

#include "spinboson/model.hpp"

#include <cstddef>
#include <vector>

namespace spinboson {

enum class TieRule {
    // Add tie rows group by group, keeping only those that raise the rank, until
    // the per-level system is square and nonsingular.
    RankCompleting,
    // Tie every member of every group; overdetermined for N >= 3.
    AllGroups,
};

struct GOptions {
    double pole_guard = 1e-10;
    int level_cap = 300;
    bool force_convergence_gate = false;
    TieRule tie_rule = TieRule::RankCompleting;
    double rank_tol = 1e-10;
    double consistency_tol = 1e-9;
};

struct LevelDiagnostics {
    int level = 0;             // level of the unknowns solved for
    std::size_t equations = 0; // recurrence rows taken from the level below
    std::size_t unknowns = 0;
    std::size_t tie_rows = 0;
    std::size_t rank = 0;
    double residual = 0.0;     // max-norm residual relative to max(1, |rhs|)
    bool underdetermined = false; // consistent but singular: minimum-norm solution
};

class CoefficientTable {
public:
    double x_value() const noexcept { return x_; }
    int max_level() const noexcept { return series_.max_level(); }
    std::size_t n_modes() const noexcept { return n_modes_; }
    const std::vector<std::size_t>& active_modes() const noexcept { return active_; }

    // B_n for a full N-component index. Zero when n touches a mode with g_j = 0
    // or one folded into a collective mode.
    // Throws std::out_of_range above max_level().
    double coefficient(const MultiIndex& n) const;

    // B over the active modes only.
    const GradedSeries& active_series() const noexcept { return series_; }
    const std::vector<LevelDiagnostics>& diagnostics() const noexcept { return diagnostics_; }

private:
    friend CoefficientTable build_coefficients(const ModelParams&, double, int, const GOptions&);

    double x_ = 0.0;
    std::size_t n_modes_ = 0;
    std::vector<std::size_t> active_;
    GradedSeries series_;
    std::vector<LevelDiagnostics> diagnostics_;
};

inline constexpr double kDivergenceFactor = 1e6;

struct GEvaluation {
    double x = 0.0;
    ParitySector sector = ParitySector::Plus;
    double value = 0.0;
    int max_level = 0;
    double tail_estimate = 0.0;
    bool converged = false;
    bool diverged = false;   // level contributions grew by kDivergenceFactor past their minimum
};

struct PoleEntry {
    double x_pole = 0.0;
    std::vector<MultiIndex> indices;
};

struct PoleList {
    std::vector<PoleEntry> entries;
};

// Throws ConvergenceGateError when max_j g_j/w_j >= 1 unless forced.
void check_convergence_gate(const ModelParams& params, const GOptions& opts);

// Throws PoleProximity when |X - n.w| <= pole_guard.
double f_term(const ModelParams& params, double x, const MultiIndex& n,
              double pole_guard = 1e-10);

CoefficientTable build_coefficients(const ModelParams& params, double x, int max_level,
                                    const GOptions& opts = {});

// Partial sums level by level in extended precision. Converged once three
// consecutive level contributions, and the geometric tail estimate, fall below
// tol * max(1, largest partial sum or level contribution seen so far).
// Hitting opts.level_cap returns converged = false. So does a divergent series,
// which also sets diverged.
GEvaluation evaluate_G(const ModelParams& params, ParitySector sector, double x, double tol,
                       const GOptions& opts = {});

// Poles X = n.w <= x_max over the coupled modes, clustered within cluster_tol.
PoleList poles(const ModelParams& params, double x_max, double cluster_tol = 1e-9);

} // namespace spinboson
