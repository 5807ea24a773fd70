#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ml/cart.hpp"
#include "zsm/errors.hpp"

namespace zsm::ml
{

namespace
{

constexpr double tau = 1e-12;

class RbfKernel
{
    public:
        RbfKernel(const Eigen::MatrixXd& X, double gamma, std::size_t cache_bytes)
            : X_(X), gamma_(gamma), n_(X.rows()), sq_(X.rowwise().squaredNorm())
        {
            const auto need = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_) * sizeof(double);
            if (need <= cache_bytes)
            {
                full_.resize(n_, n_);
                for (Eigen::Index j = 0; j < n_; ++j)
                    fill(j, full_.col(j).data());
            }
            else
            {
                scratch_[0].resize(n_);
                scratch_[1].resize(n_);
            }
        }

        // Column j of K; `slot` picks one of two scratch buffers when uncached.
        const double* column(Eigen::Index j, int slot)
        {
            if (full_.size() > 0)
                return full_.col(j).data();
            fill(j, scratch_[slot].data());
            return scratch_[slot].data();
        }

    private:
        void fill(Eigen::Index j, double* out) const
        {
            for (Eigen::Index i = 0; i < n_; ++i)
            {
                const double d2 = std::max(0.0, sq_(i) + sq_(j) - 2.0 * X_.row(i).dot(X_.row(j)));
                out[i] = std::exp(-gamma_ * d2);
            }
        }

        const Eigen::MatrixXd& X_;
        double gamma_;
        Eigen::Index n_;
        Eigen::VectorXd sq_;
        Eigen::MatrixXd full_;
        Eigen::VectorXd scratch_[2];
};

struct DualSolution
{
    Eigen::VectorXd alpha;
    double rho = 0.0;
    long iterations = 0;
};

// C-SVC dual via SMO with second-order working-set selection. y in {-1, +1}.
DualSolution solve_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& Cb, double gamma,
                        double eps, long max_iter, std::size_t cache_bytes)
{
    const Eigen::Index n = X.rows();
    RbfKernel K(X, gamma, cache_bytes);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
    auto upper = [&](Eigen::Index t) { return alpha(t) >= Cb(t); };
    auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

    long iter = 0;
    for (;; ++iter)
    {
        if (iter >= max_iter)
            throw SvmConvergenceError("SMO did not reach the KKT tolerance within " + std::to_string(max_iter)
                                      + " iterations");

        double Gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t)
        {
            if (y(t) > 0 ? !upper(t) : !lower(t))
            {
                const double v = -y(t) * G(t);
                if (v >= Gmax)
                {
                    Gmax = v;
                    i = t;
                }
            }
        }
        if (i < 0)
            break;
        const double* Ki = K.column(i, 0);

        double Gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < n; ++t)
        {
            if (y(t) > 0 ? lower(t) : upper(t))
                continue;
            const double v = y(t) * G(t); // -(-y_t G_t)
            Gmax2 = std::max(Gmax2, v);
            const double diff = Gmax + v;
            if (diff > 0.0)
            {
                double quad = 2.0 - 2.0 * Ki[t]; // K_ii + K_tt - 2 K_it
                if (quad <= 0.0)
                    quad = tau;
                const double obj = -diff * diff / quad;
                if (obj <= best)
                {
                    best = obj;
                    j = t;
                }
            }
        }
        if (Gmax + Gmax2 < eps || j < 0)
            break;
        const double* Kj = K.column(j, 1);

        const double Ci = Cb(i), Cj = Cb(j);
        const double ai = alpha(i), aj = alpha(j);
        const double Qij = y(i) * y(j) * Ki[j];
        if (y(i) != y(j))
        {
            double quad = 2.0 + 2.0 * Qij;
            if (quad <= 0.0)
                quad = tau;
            const double delta = (-G(i) - G(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0)
            {
                if (alpha(j) < 0.0)
                {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            }
            else if (alpha(i) < 0.0)
            {
                alpha(i) = 0.0;
                alpha(j) = -diff;
            }
            if (diff > Ci - Cj)
            {
                if (alpha(i) > Ci)
                {
                    alpha(i) = Ci;
                    alpha(j) = Ci - diff;
                }
            }
            else if (alpha(j) > Cj)
            {
                alpha(j) = Cj;
                alpha(i) = Cj + diff;
            }
        }
        else
        {
            double quad = 2.0 - 2.0 * Qij;
            if (quad <= 0.0)
                quad = tau;
            const double delta = (G(i) - G(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > Ci)
            {
                if (alpha(i) > Ci)
                {
                    alpha(i) = Ci;
                    alpha(j) = sum - Ci;
                }
            }
            else if (alpha(j) < 0.0)
            {
                alpha(j) = 0.0;
                alpha(i) = sum;
            }
            if (sum > Cj)
            {
                if (alpha(j) > Cj)
                {
                    alpha(j) = Cj;
                    alpha(i) = sum - Cj;
                }
            }
            else if (alpha(i) < 0.0)
            {
                alpha(i) = 0.0;
                alpha(j) = sum;
            }
        }

        const double di = alpha(i) - ai, dj = alpha(j) - aj;
        const double yi = y(i), yj = y(j);
        for (Eigen::Index t = 0; t < n; ++t)
            G(t) += y(t) * (yi * Ki[t] * di + yj * Kj[t] * dj);
    }

    // rho: mean over free vectors, else midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int free = 0;
    for (Eigen::Index t = 0; t < n; ++t)
    {
        const double yG = y(t) * G(t);
        if (upper(t))
        {
            if (y(t) < 0)
                ub = std::min(ub, yG);
            else
                lb = std::max(lb, yG);
        }
        else if (lower(t))
        {
            if (y(t) > 0)
                ub = std::min(ub, yG);
            else
                lb = std::max(lb, yG);
        }
        else
        {
            ++free;
            sum_free += yG;
        }
    }
    const double rho = free > 0 ? sum_free / free : 0.5 * (ub + lb);
    return {std::move(alpha), rho, iter};
}

struct Standardized
{
    Eigen::MatrixXd X;
    Eigen::VectorXd mean, scale;
};

Standardized standardize(const Eigen::MatrixXd& X)
{
    Standardized s;
    s.mean = X.colwise().mean().transpose();
    s.scale.resize(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c)
    {
        const double var = (X.col(c).array() - s.mean(c)).square().mean();
        s.scale(c) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    s.X = (X.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
    return s;
}

struct FittedSvm
{
    DualSolution dual;
    std::vector<int> sv;
};

FittedSvm fit(const Eigen::MatrixXd& Xs, const std::vector<int>& y01, const std::array<double, 2>& cw,
              const SvmConfig& cfg, double gamma)
{
    const auto n = static_cast<Eigen::Index>(y01.size());
    Eigen::VectorXd y(n), Cb(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const int c = y01[static_cast<std::size_t>(i)];
        y(i) = c == 1 ? 1.0 : -1.0;
        Cb(i) = cfg.C * cw[static_cast<std::size_t>(c)];
    }
    const long max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : std::max<long>(10000000L, 100L * n);
    FittedSvm f{solve_dual(Xs, y, Cb, gamma, cfg.tolerance, max_iter, cfg.cache_mb << 20), {}};
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (f.dual.alpha(i) > 0.0)
            f.sv.push_back(static_cast<int>(i));
    }
    return f;
}

// Margins f(x) = sum y_i alpha_i K(x_i, x) - rho for rows of Q.
Eigen::VectorXd margins(const Eigen::MatrixXd& Xtrain, const FittedSvm& f, const std::vector<int>& y01,
                        double gamma, const Eigen::MatrixXd& Q)
{
    Eigen::VectorXd out = Eigen::VectorXd::Constant(Q.rows(), -f.dual.rho);
    for (int i : f.sv)
    {
        const double coef = (y01[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0) * f.dual.alpha(i);
        const Eigen::VectorXd d2 = (Q.rowwise() - Xtrain.row(i)).rowwise().squaredNorm();
        out += coef * (-gamma * d2.array()).exp().matrix();
    }
    return out;
}

// Platt sigmoid P(y = 1 | f) = 1 / (1 + exp(A f + B)) by Newton with backtracking on smoothed targets.
std::pair<double, double> fit_platt(const Eigen::VectorXd& f, const std::vector<int>& y01)
{
    const double n1 = static_cast<double>(std::count(y01.begin(), y01.end(), 1));
    const double n0 = static_cast<double>(y01.size()) - n1;
    const double hi = (n1 + 1.0) / (n1 + 2.0), lo = 1.0 / (n0 + 2.0);
    const auto n = f.size();
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i)
        t(i) = y01[static_cast<std::size_t>(i)] == 1 ? hi : lo;

    auto objective = [&](double A, double B) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double z = f(i) * A + B;
            v += z >= 0.0 ? t(i) * z + std::log1p(std::exp(-z)) : (t(i) - 1.0) * z + std::log1p(std::exp(z));
        }
        return v;
    };

    double A = 0.0, B = std::log((n0 + 1.0) / (n1 + 1.0));
    double fval = objective(A, B);
    for (int it = 0; it < 100; ++it)
    {
        double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double z = f(i) * A + B;
            double p, q;
            if (z >= 0.0)
            {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            }
            else
            {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += f(i) * f(i) * d2;
            h22 += d2;
            h21 += f(i) * d2;
            const double d1 = t(i) - p;
            g1 += f(i) * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5)
            break;
        const double det = h11 * h22 - h21 * h21;
        const double dA = -(h22 * g1 - h21 * g2) / det;
        const double dB = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * dA + g2 * dB;
        double step = 1.0;
        while (step >= 1e-10)
        {
            const double nA = A + step * dA, nB = B + step * dB;
            const double nf = objective(nA, nB);
            if (nf < fval + 1e-4 * step * gd)
            {
                A = nA;
                B = nB;
                fval = nf;
                break;
            }
            step *= 0.5;
        }
        if (step < 1e-10)
            break;
    }
    return {A, B};
}

double rbf_gamma(const Eigen::MatrixXd& Xs, const SvmConfig& cfg)
{
    if (cfg.gamma > 0.0)
        return cfg.gamma;
    const double mean = Xs.mean();
    const double var = (Xs.array() - mean).square().mean();
    return 1.0 / (static_cast<double>(Xs.cols()) * (var > 0.0 ? var : 1.0));
}

} // namespace

SvmModel train_svm(const Dataset& data, const SvmConfig& cfg)
{
    detail::require_two_classes(data, "train_svm");
    if (!(cfg.C > 0.0) || !(cfg.tolerance > 0.0) || cfg.cv_folds < 2)
        throw std::invalid_argument("train_svm: need C > 0, tolerance > 0, cv_folds >= 2.");

    const auto y01 = detail::labels01(data);
    const Standardized st = standardize(data.X);
    const double gamma = rbf_gamma(st.X, cfg);

    std::array<double, 2> cw{1.0, 1.0};
    if (cfg.balanced)
    {
        const double n = static_cast<double>(y01.size());
        const double n1 = static_cast<double>(std::count(y01.begin(), y01.end(), 1));
        cw = {n / (2.0 * (n - n1)), n / (2.0 * n1)};
    }

    const FittedSvm full = fit(st.X, y01, cw, cfg, gamma);

    // stratified folds for out-of-sample calibration margins
    const auto n = static_cast<Eigen::Index>(y01.size());
    std::vector<int> fold(y01.size());
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x53564d));
    for (int cls : {0, 1})
    {
        std::vector<int> idx;
        for (std::size_t i = 0; i < y01.size(); ++i)
            if (y01[i] == cls)
                idx.push_back(static_cast<int>(i));
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < idx.size(); ++k)
            fold[static_cast<std::size_t>(idx[k])] = static_cast<int>(k % static_cast<std::size_t>(cfg.cv_folds));
    }

    Eigen::VectorXd cv_margin(n);
    bool cv_ok = true;
    for (int k = 0; k < cfg.cv_folds && cv_ok; ++k)
    {
        std::vector<int> tr, te;
        for (Eigen::Index i = 0; i < n; ++i)
            (fold[static_cast<std::size_t>(i)] == k ? te : tr).push_back(static_cast<int>(i));
        std::vector<int> ytr;
        for (int i : tr)
            ytr.push_back(y01[static_cast<std::size_t>(i)]);
        const auto n1 = std::count(ytr.begin(), ytr.end(), 1);
        if (te.empty() || n1 == 0 || n1 == static_cast<long>(ytr.size()))
        {
            cv_ok = false;
            break;
        }
        const Eigen::MatrixXd Xtr = st.X(tr, Eigen::all);
        const FittedSvm sub = fit(Xtr, ytr, cw, cfg, gamma);
        const Eigen::VectorXd m = margins(Xtr, sub, ytr, gamma, st.X(te, Eigen::all));
        for (std::size_t r = 0; r < te.size(); ++r)
            cv_margin(te[r]) = m(static_cast<Eigen::Index>(r));
    }
    if (!cv_ok)
        cv_margin = margins(st.X, full, y01, gamma, st.X); // in-sample fallback for tiny data

    SvmModel m;
    m.config = cfg;
    m.gamma = gamma;
    m.mean = st.mean;
    m.scale = st.scale;
    m.bias = -full.dual.rho;
    m.iterations = full.dual.iterations;
    m.class_weight = cw;
    m.support_indices = full.sv;
    m.support_vectors.resize(static_cast<Eigen::Index>(full.sv.size()), data.X.cols());
    m.dual_coefficients.resize(static_cast<Eigen::Index>(full.sv.size()));
    for (std::size_t k = 0; k < full.sv.size(); ++k)
    {
        const int i = full.sv[k];
        const auto r = static_cast<Eigen::Index>(k);
        m.support_vectors.row(r) = st.X.row(i);
        m.dual_coefficients(r) = (y01[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0) * full.dual.alpha(i);
    }
    std::tie(m.platt_a, m.platt_b) = fit_platt(cv_margin, y01);
    return m;
}

double decision_value(const SvmModel& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (m.mean.size() == 0)
        throw UntrainedModelError("support vector machine is not trained");
    if (x.size() != m.mean.size())
        throw std::invalid_argument("decision_value: feature count mismatch.");
    const Eigen::VectorXd z = (x - m.mean).cwiseQuotient(m.scale);
    double f = m.bias;
    for (Eigen::Index k = 0; k < m.support_vectors.rows(); ++k)
        f += m.dual_coefficients(k) * std::exp(-m.gamma * (m.support_vectors.row(k).transpose() - z).squaredNorm());
    return f;
}

ClassProbability predict_proba(const SvmModel& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const double z = m.platt_a * decision_value(m, x) + m.platt_b;
    const double p = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    return ClassProbability::from_nlos(p);
}

KktReport kkt_audit(const SvmModel& m, const Dataset& train, double tol)
{
    const auto n = static_cast<Eigen::Index>(train.y.size());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < m.support_indices.size(); ++k)
    {
        const int i = m.support_indices[k];
        if (i < 0 || i >= n)
            throw std::invalid_argument("kkt_audit: dataset does not match the training set.");
        alpha(i) = std::abs(m.dual_coefficients(static_cast<Eigen::Index>(k)));
    }
    KktReport r;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const int c = static_cast<int>(train.y[static_cast<std::size_t>(i)]);
        const double y = c == 1 ? 1.0 : -1.0;
        const double C = m.config.C * m.class_weight[static_cast<std::size_t>(c)];
        const double yf = y * decision_value(m, train.X.row(i).transpose());
        double v;
        if (alpha(i) <= 0.0)
            v = std::max(0.0, 1.0 - yf);
        else if (alpha(i) >= C)
            v = std::max(0.0, yf - 1.0);
        else
            v = std::abs(yf - 1.0);
        r.max_violation = std::max(r.max_violation, v);
        if (v > tol)
            ++r.violations;
    }
    r.passed = r.violations == 0;
    return r;
}

} // namespace zsm::ml
