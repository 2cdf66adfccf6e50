#include "spinboson/error.hpp"
#include "spinboson/fock.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace spinboson {

namespace {

bool imaginary_free(const SparseC& m) {
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseC::InnerIterator it(m, k); it; ++it) {
            if (it.value().imag() != 0.0) return false;
        }
    }
    return true;
}

std::vector<double> dense_lowest(const SparseC& m, std::size_t k) {
    const auto n = static_cast<lapack_int>(m.rows());
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    lapack_int info = 0;
    const auto iu = static_cast<lapack_int>(k);
    if (imaginary_free(m)) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int c = 0; c < m.outerSize(); ++c) {
            for (SparseC::InnerIterator it(m, c); it; ++it) a(it.row(), it.col()) = it.value().real();
        }
        double z = 0.0;
        info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, iu,
                              0.0, &found, w.data(), &z, 1, isuppz.data());
    } else {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
        for (int c = 0; c < m.outerSize(); ++c) {
            for (SparseC::InnerIterator it(m, c); it; ++it) a(it.row(), it.col()) = it.value();
        }
        cplx z{};
        info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'N', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, iu,
                              0.0, &found, w.data(), &z, 1, isuppz.data());
    }
    if (info != 0 || static_cast<std::size_t>(found) != k) {
        throw EigenConvergenceError("dense eigensolver failed with info " + std::to_string(info),
                                    std::nan(""));
    }
    w.resize(k);
    return w;
}

// Lanczos with full reorthogonalisation on the complement of the locked vectors.
// Converged Ritz pairs are locked from the bottom of the spectrum upwards; a final
// pass on the deflated operator checks no lower (degenerate) copy was missed.
class LockingLanczos {
public:
    LockingLanczos(const SparseC& h, const EigenOptions& opts) : h_(h), opts_(opts), rng_(12345) {}

    std::vector<double> run(std::size_t k) {
        const auto n = static_cast<std::size_t>(h_.rows());
        while (true) {
            while (values_.size() < k) lock_next(k, n);
            // verification: the deflated operator must not have an eigenvalue
            // below the largest locked one
            if (values_.size() == n) break;
            const auto [lam, vec, res] = lowest_deflated(n);
            const double top = *std::max_element(values_.begin(), values_.end());
            if (lam < top - opts_.residual_tol && res <= opts_.residual_tol) {
                lock(lam, vec);
                continue;
            }
            break;
        }
        std::vector<double> out = values_;
        std::sort(out.begin(), out.end());
        out.resize(k);
        return out;
    }

private:
    struct Ritz {
        double value;
        Eigen::VectorXcd vector;
        double residual;
    };

    void lock(double lam, const Eigen::VectorXcd& v) {
        Eigen::VectorXcd u = v;
        orthogonalise(u, locked_);
        orthogonalise(u, locked_);
        u.normalize();
        locked_.push_back(std::move(u));
        values_.push_back(lam);
    }

    static void orthogonalise(Eigen::VectorXcd& v, const std::vector<Eigen::VectorXcd>& basis) {
        for (const auto& q : basis) v -= q * q.dot(v);
    }

    Eigen::VectorXcd random_start(std::size_t n) {
        std::normal_distribution<double> nd;
        Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
        for (auto& x : v) x = cplx{nd(rng_), nd(rng_)};
        return v;
    }

    double residual(double lam, const Eigen::VectorXcd& v) const {
        return (h_ * v - lam * v).norm();
    }

    // One Lanczos sweep; returns Ritz pairs ascending with explicit residuals.
    std::vector<Ritz> sweep(Eigen::VectorXcd start, std::size_t n) {
        const std::size_t free_dim = n - locked_.size();
        const std::size_t m = std::min(opts_.krylov_dim, free_dim);
        std::vector<Eigen::VectorXcd> v;
        std::vector<double> alpha, beta;
        orthogonalise(start, locked_);
        start.normalize();
        v.push_back(start);
        for (std::size_t j = 0; j < m; ++j) {
            Eigen::VectorXcd w = h_ * v[j];
            alpha.push_back(v[j].dot(w).real());
            for (int pass = 0; pass < 2; ++pass) {
                orthogonalise(w, locked_);
                orthogonalise(w, v);
            }
            const double b = w.norm();
            if (j + 1 == m || b < 1e-13 * std::max(1.0, std::abs(alpha.back()))) break;
            beta.push_back(b);
            v.push_back(w / b);
        }
        const auto steps = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
        for (Eigen::Index i = 0; i < steps; ++i) {
            t(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        std::vector<Ritz> out;
        for (Eigen::Index r = 0; r < steps; ++r) {
            Eigen::VectorXcd y = Eigen::VectorXcd::Zero(h_.rows());
            for (Eigen::Index i = 0; i < steps; ++i) {
                y += es.eigenvectors()(i, r) * v[static_cast<std::size_t>(i)];
            }
            y.normalize();
            const double lam = es.eigenvalues()(r);
            out.push_back({lam, y, residual(lam, y)});
            if (out.back().residual > opts_.residual_tol) break; // only the converged prefix matters
        }
        return out;
    }

    void lock_next(std::size_t k, std::size_t n) {
        Eigen::VectorXcd start = random_start(n);
        double worst = std::numeric_limits<double>::infinity();
        for (int restart = 0; restart <= opts_.max_restarts; ++restart) {
            auto ritz = sweep(start, n);
            std::size_t locked_now = 0;
            for (const auto& r : ritz) {
                if (r.residual > opts_.residual_tol || values_.size() >= k) break;
                lock(r.value, r.vector);
                ++locked_now;
            }
            if (locked_now > 0) return;
            worst = ritz.front().residual;
            start = ritz.front().vector;
        }
        throw EigenConvergenceError("Lanczos did not converge", worst);
    }

    Ritz lowest_deflated(std::size_t n) {
        Eigen::VectorXcd start = random_start(n);
        Ritz best{0.0, {}, std::numeric_limits<double>::infinity()};
        for (int restart = 0; restart <= opts_.max_restarts; ++restart) {
            best = sweep(start, n).front();
            if (best.residual <= opts_.residual_tol) break;
            start = best.vector;
        }
        return best;
    }

    const SparseC& h_;
    EigenOptions opts_;
    std::mt19937_64 rng_;
    std::vector<Eigen::VectorXcd> locked_;
    std::vector<double> values_;
};

} // namespace

std::vector<double> hermitian_eigenvalues(const SparseC& m, std::size_t k,
                                          const EigenOptions& opts) {
    const auto n = static_cast<std::size_t>(m.rows());
    if (k > n) {
        throw ValidationError("requested " + std::to_string(k) + " eigenvalues of a " +
                              std::to_string(n) + "-dimensional operator");
    }
    if (k == 0) return {};
    if (n <= opts.dense_threshold) return dense_lowest(m, k);
    return LockingLanczos(m, opts).run(k);
}

std::vector<double> eigenvalues(const FockOperator& op, std::size_t k, const EigenOptions& opts) {
    return hermitian_eigenvalues(op.matrix, k, opts);
}

} // namespace spinboson
