#include "spinboson/gfunction.hpp"

#include "spinboson/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace spinboson {

namespace {

// Coupled modes only; everything below works in this reduced space.
// Modes with identical (w, g) are replaced by their collective mode: the relative
// combinations decouple exactly, and the tie closure is singular on that set.
// The recurrence carries a growing parasitic solution seeded by rounding, so it
// runs in extended precision.
using Real = long double;
using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct ActiveModel {
    std::vector<std::size_t> modes;
    std::vector<Real> omega;
    std::vector<Real> g;
    std::vector<Real> log_r;
    Real delta = 0.0;
    Real two_shift = 0.0; // 2 sum_j g_j^2 / w_j
    double max_ratio = 0.0;

    std::size_t n() const noexcept { return modes.size(); }
};

ActiveModel active_model(const ModelParams& p) {
    ActiveModel m;
    m.delta = p.delta();
    std::vector<int> copies;
    for (std::size_t j = 0; j < p.n_modes(); ++j) {
        const double g = p.couplings()[j];
        const double w = p.omegas()[j];
        if (g == 0.0) continue;
        m.two_shift += 2 * Real(g) * g / w;
        bool merged = false;
        for (std::size_t k = 0; k < m.modes.size(); ++k) {
            const std::size_t r = m.modes[k];
            if (p.omegas()[r] == w && p.couplings()[r] == g) {
                ++copies[k];
                merged = true;
                break;
            }
        }
        if (merged) continue;
        m.modes.push_back(j);
        m.omega.push_back(w);
        m.g.push_back(g);
        copies.push_back(1);
    }
    for (std::size_t k = 0; k < m.modes.size(); ++k) {
        m.g[k] *= std::sqrt(Real(copies[k]));
        m.log_r.push_back(std::log(m.g[k] / m.omega[k]));
        m.max_ratio = std::max(m.max_ratio, static_cast<double>(m.g[k] / m.omega[k]));
    }
    return m;
}

Real binomial_real(int n, int k) {
    k = std::min(k, n - k);
    Real r = 1.0;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// (sum n)! / prod n_j!, evaluated over sorted entries so permuted indices agree bitwise.
Real multinomial(std::span<const int> entries) {
    std::vector<int> sorted(entries.begin(), entries.end());
    std::sort(sorted.begin(), sorted.end());
    Real r = 1.0;
    int partial = 0;
    for (int e : sorted) {
        partial += e;
        r *= binomial_real(partial, e);
    }
    return r;
}

// log[ (sum n)!/prod n_j! * prod r_j^{n_j} ]
Real log_weight(std::span<const int> entries, const std::vector<Real>& log_r) {
    int level = 0;
    Real s = 0.0;
    for (std::size_t j = 0; j < entries.size(); ++j) {
        level += entries[j];
        s += entries[j] * log_r[j] - std::lgamma(entries[j] + 1.0L);
    }
    return s + std::lgamma(level + 1.0L);
}

// Steps the recurrence one level at a time in normalized form:
//   B_n = multinomial(n) * w_n,
// which turns every row into  sum_j g_j w_{n+e_j} = rho_n  with
//   rho_n = [f_n w_n - sum_j g_j (n_j/q) w_{n-e_j}] / (q+1),   q = |n|.
class Recurrence {
public:
    Recurrence(const ActiveModel& model, double x, const GOptions& opts)
        : m_(model), x_(x), opts_(opts) {
        cur_ = {1.0};
        if (m_.n() >= 3) cur_idx_ = {MultiIndex::zero(m_.n())};
    }

    int level() const noexcept { return level_; }

    LevelDiagnostics advance() {
        LevelDiagnostics d;
        switch (m_.n()) {
        case 1: d = advance_single(); break;
        case 2: d = advance_pair(); break;
        default: d = advance_dense(); break;
        }
        ++level_;
        return d;
    }

    // Contribution of the current level to G with sign s = +-1.
    Real contribution(int s) const {
        const int L = level_;
        Real sum = 0.0;
        if (m_.n() == 1) {
            const Real nw = L * m_.omega[0];
            sum = std::exp(L * m_.log_r[0]) * cur_[0] * (1 - s * m_.delta / gap(nw));
        } else if (m_.n() == 2) {
            const Real lgL = std::lgamma(L + 1.0L);
            for (int a = 0; a <= L; ++a) {
                const Real nw = a * m_.omega[0] + (L - a) * m_.omega[1];
                const Real lw = lgL - std::lgamma(a + 1.0L) - std::lgamma(L - a + 1.0L) +
                                a * m_.log_r[0] + (L - a) * m_.log_r[1];
                sum += std::exp(lw) * cur_[a] * (1 - s * m_.delta / gap(nw));
            }
        } else {
            for (std::size_t i = 0; i < cur_idx_.size(); ++i) {
                const auto& n = cur_idx_[i];
                sum += std::exp(log_weight(n.entries(), m_.log_r)) * cur_[i] *
                       (1 - s * m_.delta / gap(dot(n)));
            }
        }
        return sum;
    }

    // B at the current level, ordered by lexicographic rank.
    std::vector<double> current_coefficients() const {
        std::vector<double> b(cur_.size());
        if (m_.n() == 1) {
            b[0] = static_cast<double>(cur_[0]);
        } else if (m_.n() == 2) {
            for (int a = 0; a <= level_; ++a) {
                const int e[2] = {a, level_ - a};
                b[a] = static_cast<double>(multinomial(e) * cur_[a]);
            }
        } else {
            for (std::size_t i = 0; i < cur_.size(); ++i) {
                b[i] = static_cast<double>(multinomial(cur_idx_[i].entries()) * cur_[i]);
            }
        }
        return b;
    }

private:
    // X - n.w, refusing approaches inside the pole guard.
    Real gap(Real nw) const {
        const Real d = x_ - nw;
        if (std::abs(d) <= opts_.pole_guard) {
            throw PoleProximity(static_cast<double>(x_), static_cast<double>(nw), opts_.pole_guard);
        }
        return d;
    }

    Real f(Real nw) const {
        const Real d = gap(nw);
        return m_.two_shift + (nw - x_ + m_.delta * m_.delta / d) / 2;
    }

    Real dot(const MultiIndex& n) const {
        Real s = 0.0;
        for (std::size_t j = 0; j < n.size(); ++j) s += n[j] * m_.omega[j];
        return s;
    }

    LevelDiagnostics advance_single() {
        const int q = level_;
        const Real g = m_.g[0];
        Real rho = f(q * m_.omega[0]) * cur_[0];
        if (q > 0) rho -= g * low_[0];
        rho /= (q + 1);
        low_ = cur_;
        cur_ = {rho / g};
        return {q + 1, 1, 1, 0, 1, 0.0, false};
    }

    LevelDiagnostics advance_pair() {
        const int q = level_;
        const Real g1 = m_.g[0], g2 = m_.g[1];
        const std::size_t rows = static_cast<std::size_t>(q) + 1;
        const std::size_t unknowns = rows + 1;

        std::vector<Real> rho(rows);
        for (int a = 0; a <= q; ++a) {
            const Real nw = a * m_.omega[0] + (q - a) * m_.omega[1];
            Real val = f(nw) * cur_[a];
            if (q > 0) {
                if (a >= 1) val -= g1 * (static_cast<Real>(a) / q) * low_[a - 1];
                if (q - a >= 1) val -= g2 * (static_cast<Real>(q - a) / q) * low_[a];
            }
            rho[a] = val / (q + 1);
        }

        // Rows: g1 v_{a+1} + g2 v_a = rho_a, a = 0..q; tie v_0 = v_{q+1}.
        // Run the chain in its contracting direction: v = p + t h.
        std::vector<Real> p(unknowns, 0.0), h(unknowns, 0.0);
        const bool forward = g2 <= g1;
        std::size_t end;
        if (forward) {
            h[0] = 1.0;
            for (int a = 0; a <= q; ++a) {
                p[a + 1] = (rho[a] - g2 * p[a]) / g1;
                h[a + 1] = -g2 * h[a] / g1;
            }
            end = unknowns - 1;
        } else {
            h[unknowns - 1] = 1.0;
            for (int a = q; a >= 0; --a) {
                p[a] = (rho[a] - g1 * p[a + 1]) / g2;
                h[a] = -g1 * h[a + 1] / g2;
            }
            end = 0;
        }

        LevelDiagnostics d{q + 1, rows, unknowns, 1, unknowns, 0.0, false};
        Real p_scale = 1.0;
        for (Real v : p) p_scale = std::max(p_scale, std::abs(v));

        const Real denom = 1 - h[end];
        Real t;
        if (std::abs(denom) > opts_.rank_tol) {
            t = p[end] / denom;
        } else if (std::abs(p[end]) <= opts_.consistency_tol * p_scale) {
            // every member of the solution line satisfies the tie; take the shortest
            Real ph = 0.0, hh = 0.0;
            for (std::size_t k = 0; k < unknowns; ++k) {
                ph += p[k] * h[k];
                hh += h[k] * h[k];
            }
            t = -ph / hh;
            d.rank = unknowns - 1;
            d.underdetermined = true;
        } else {
            throw RankDeficient(q + 1);
        }

        std::vector<Real> v(unknowns);
        for (std::size_t k = 0; k < unknowns; ++k) v[k] = p[k] + t * h[k];
        if (forward) v[unknowns - 1] = v[0];
        else v[0] = v[unknowns - 1];

        Real res = 0.0, rho_max = 0.0, v_max = 0.0;
        for (int a = 0; a <= q; ++a) {
            res = std::max(res, std::abs(g1 * v[a + 1] + g2 * v[a] - rho[a]));
            rho_max = std::max(rho_max, std::abs(rho[a]));
        }
        for (Real x : v) v_max = std::max(v_max, std::abs(x));
        d.residual = static_cast<double>(res / std::max({Real(1), rho_max, std::max(g1, g2) * v_max}));
        if (d.residual > 1e-8 * static_cast<double>(rows + 1)) {
            throw ResidualTooLarge(q + 1, d.residual);
        }

        low_ = std::move(cur_);
        cur_ = std::move(v);
        return d;
    }

    LevelDiagnostics advance_dense() {
        const int q = level_;
        const std::size_t N = m_.n();
        const auto& lower = cur_idx_;
        auto upper = enumerate_level(N, q + 1);
        const std::size_t R = lower.size();
        const std::size_t U = upper.size();

        MatrixR A = MatrixR::Zero(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(U));
        std::vector<Real> rho(R);
        for (std::size_t i = 0; i < R; ++i) {
            const auto& n = lower[i];
            Real val = f(dot(n)) * cur_[i];
            for (std::size_t j = 0; j < N; ++j) {
                A(static_cast<Eigen::Index>(i),
                  static_cast<Eigen::Index>(level_rank(n.plus_unit(j)))) += m_.g[j];
                if (q > 0 && n[j] > 0) {
                    val -= m_.g[j] * (static_cast<Real>(n[j]) / q) *
                           low_[level_rank(*n.minus_unit(j))];
                }
            }
            rho[i] = val / (q + 1);
        }

        // tie candidates: indices with a zero entry, grouped by sorted multiset
        std::map<std::vector<int>, std::vector<std::size_t>> groups;
        for (std::size_t k = 0; k < U; ++k) {
            if (!upper[k].has_zero_entry()) continue;
            std::vector<int> key(upper[k].entries().begin(), upper[k].entries().end());
            std::sort(key.begin(), key.end());
            groups[key].push_back(k);
        }

        // Gram-Schmidt rank tracking over the rows accepted so far
        std::vector<VectorR> basis;
        auto raises_rank = [&](const VectorR& row) {
            VectorR u = row;
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& b : basis) u -= b.dot(u) * b;
            }
            const Real nu = u.norm();
            if (nu > opts_.rank_tol * row.norm()) {
                basis.push_back(u / nu);
                return true;
            }
            return false;
        };
        for (std::size_t i = 0; i < R; ++i) raises_rank(A.row(static_cast<Eigen::Index>(i)).transpose());

        std::vector<std::pair<std::size_t, std::size_t>> ties;
        for (const auto& [key, members] : groups) {
            for (std::size_t k = 1; k < members.size(); ++k) {
                if (opts_.tie_rule == TieRule::AllGroups) {
                    ties.emplace_back(members[0], members[k]);
                    continue;
                }
                if (basis.size() >= U) break;
                VectorR row = VectorR::Zero(static_cast<Eigen::Index>(U));
                row(static_cast<Eigen::Index>(members[0])) = 1.0;
                row(static_cast<Eigen::Index>(members[k])) = -1.0;
                if (raises_rank(row)) ties.emplace_back(members[0], members[k]);
            }
        }

        const auto total = static_cast<Eigen::Index>(R + ties.size());
        MatrixR M = MatrixR::Zero(total, static_cast<Eigen::Index>(U));
        VectorR b = VectorR::Zero(total);
        M.topRows(static_cast<Eigen::Index>(R)) = A;
        for (std::size_t i = 0; i < R; ++i) b(static_cast<Eigen::Index>(i)) = rho[i];
        for (std::size_t t = 0; t < ties.size(); ++t) {
            const auto r = static_cast<Eigen::Index>(R + t);
            M(r, static_cast<Eigen::Index>(ties[t].first)) = 1.0;
            M(r, static_cast<Eigen::Index>(ties[t].second)) = -1.0;
        }

        Eigen::CompleteOrthogonalDecomposition<MatrixR> cod(M);
        cod.setThreshold(static_cast<Real>(opts_.rank_tol));
        VectorR sol = cod.solve(b);

        LevelDiagnostics d;
        d.level = q + 1;
        d.equations = R;
        d.unknowns = U;
        d.tie_rows = ties.size();
        d.rank = static_cast<std::size_t>(cod.rank());
        const Real scale = std::max({Real(1), b.cwiseAbs().maxCoeff(),
                                     M.cwiseAbs().rowwise().sum().maxCoeff() *
                                         sol.cwiseAbs().maxCoeff()});
        d.residual = static_cast<double>((M * sol - b).cwiseAbs().maxCoeff() / scale);

        if (d.rank < U) {
            if (d.residual > opts_.consistency_tol) throw RankDeficient(q + 1);
            d.underdetermined = true;
        } else if (d.residual > 1e-8 * static_cast<double>(total)) {
            throw ResidualTooLarge(q + 1, d.residual);
        }

        low_ = std::move(cur_);
        cur_.assign(sol.data(), sol.data() + sol.size());
        cur_idx_ = std::move(upper);
        return d;
    }

    const ActiveModel& m_;
    Real x_;
    const GOptions& opts_;
    int level_ = 0;
    std::vector<Real> low_;
    std::vector<Real> cur_;
    std::vector<MultiIndex> cur_idx_; // dense path only
};

} // namespace

void check_convergence_gate(const ModelParams& params, const GOptions& opts) {
    const double r = params.max_ratio();
    if (r >= 1.0 && !opts.force_convergence_gate) {
        throw ConvergenceGateError(
            "max_j g_j/omega_j = " + std::to_string(r) +
                " >= 1: the G series is outside its checked convergence domain "
                "(use --force-convergence-gate to override)",
            r);
    }
}

double f_term(const ModelParams& params, double x, const MultiIndex& n, double pole_guard) {
    if (n.size() != params.n_modes()) {
        throw std::invalid_argument("multi-index length does not match the number of modes");
    }
    const double nw = n.dot(params.omegas());
    const double d = x - nw;
    if (std::abs(d) <= pole_guard) throw PoleProximity(x, nw, pole_guard);
    double shift = 0.0;
    for (std::size_t j = 0; j < params.n_modes(); ++j) {
        shift += params.couplings()[j] * params.couplings()[j] / params.omegas()[j];
    }
    return 2.0 * shift + 0.5 * (nw - x + params.delta() * params.delta() / d);
}

double CoefficientTable::coefficient(const MultiIndex& n) const {
    if (n.size() != n_modes_) {
        throw std::invalid_argument("multi-index length does not match the table");
    }
    std::vector<int> reduced;
    reduced.reserve(active_.size());
    std::size_t next = 0;
    for (std::size_t j = 0; j < n_modes_; ++j) {
        if (next < active_.size() && active_[next] == j) {
            reduced.push_back(n[j]);
            ++next;
        } else if (n[j] != 0) {
            return 0.0;
        }
    }
    if (n.level() > max_level()) {
        throw std::out_of_range("level " + std::to_string(n.level()) + " not built");
    }
    if (reduced.empty()) return 1.0;
    return series_.by_level[static_cast<std::size_t>(n.level())][level_rank(reduced)];
}

CoefficientTable build_coefficients(const ModelParams& params, double x, int max_level,
                                    const GOptions& opts) {
    check_convergence_gate(params, opts);
    const ActiveModel m = active_model(params);

    CoefficientTable t;
    t.x_ = x;
    t.n_modes_ = params.n_modes();
    t.active_ = m.modes;
    t.series_.n_modes = m.n();
    t.series_.by_level.push_back({1.0});
    if (m.n() == 0) return t;

    Recurrence rec(m, x, opts);
    for (int p = 1; p <= max_level; ++p) {
        t.diagnostics_.push_back(rec.advance());
        t.series_.by_level.push_back(rec.current_coefficients());
    }
    return t;
}

GEvaluation evaluate_G(const ModelParams& params, ParitySector sector, double x, double tol,
                       const GOptions& opts) {
    const int s = sign_of(sector);
    GEvaluation out;
    out.x = x;
    out.sector = sector;

    if (std::abs(x) <= opts.pole_guard) throw PoleProximity(x, 0.0, opts.pole_guard);
    const ActiveModel m = active_model(params);
    out.value = 1.0 - s * params.delta() / x;
    if (m.n() == 0) {
        out.converged = true;
        return out;
    }
    check_convergence_gate(params, opts);

    const double envelope = m.max_ratio < 1.0 ? 1.0 / (1.0 - m.max_ratio) : 1.0;
    Recurrence rec(m, x, opts);
    int small = 0;
    int rising = 0;
    double floor_c = std::numeric_limits<double>::infinity();
    std::array<double, 3> recent{};
    double peak = std::abs(out.value);
    Real acc = out.value;
    for (int p = 1; p <= opts.level_cap; ++p) {
        rec.advance();
        const Real cr = rec.contribution(s);
        const double c = static_cast<double>(cr);
        acc += cr;
        out.value = static_cast<double>(acc);
        out.max_level = p;
        out.tail_estimate = std::abs(c) * envelope;
        // rounding in the recurrence scales with the largest partial terms
        peak = std::max({peak, std::abs(c), std::abs(out.value)});
        const double scaled = tol * std::max(1.0, peak);
        small = std::abs(c) < scaled ? small + 1 : 0;
        if (small >= 3 && out.tail_estimate <= scaled) {
            out.converged = true;
            break;
        }
        // terms climbing far above their smallest value: the series has turned divergent.
        // The floor uses the largest of three neighbours so a level that cancels
        // exactly (X = n.w +- Delta) cannot pose as the minimum.
        recent[static_cast<std::size_t>(p % 3)] = std::abs(c);
        if (p >= 3) floor_c = std::min(floor_c, *std::max_element(recent.begin(), recent.end()));
        rising = std::abs(c) > kDivergenceFactor * std::max(floor_c, scaled) ? rising + 1 : 0;
        if (rising >= 3) {
            out.diverged = true;
            break;
        }
    }
    return out;
}

PoleList poles(const ModelParams& params, double x_max, double cluster_tol) {
    PoleList out;
    if (!(x_max >= 0.0)) return out;

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < params.n_modes(); ++j) {
        if (params.couplings()[j] != 0.0) active.push_back(j);
    }

    std::vector<std::pair<double, MultiIndex>> raw;
    raw.emplace_back(0.0, MultiIndex::zero(params.n_modes()));
    if (!active.empty()) {
        double w_min = std::numeric_limits<double>::infinity();
        for (std::size_t j : active) w_min = std::min(w_min, params.omegas()[j]);
        const int p_max = static_cast<int>(std::floor((x_max + cluster_tol) / w_min));
        for (int p = 1; p <= p_max; ++p) {
            for (const auto& sub : enumerate_level(active.size(), p)) {
                std::vector<int> full(params.n_modes(), 0);
                for (std::size_t k = 0; k < active.size(); ++k) full[active[k]] = sub[k];
                MultiIndex n(std::move(full));
                const double x = n.dot(params.omegas());
                if (x <= x_max + cluster_tol) raw.emplace_back(x, std::move(n));
            }
        }
    }
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
    });

    for (auto& [x, n] : raw) {
        if (!out.entries.empty() && x - out.entries.back().x_pole <= cluster_tol) {
            out.entries.back().indices.push_back(std::move(n));
        } else {
            out.entries.push_back(PoleEntry{x, {std::move(n)}});
        }
    }
    // the clustering slack admits poles just above x_max
    while (!out.entries.empty() && out.entries.back().x_pole > x_max) out.entries.pop_back();
    return out;
}

} // namespace spinboson
