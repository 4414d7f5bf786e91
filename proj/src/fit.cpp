#include "subcycle/fit.hpp"
#include <Eigen/LU>

#include "subcycle/io.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

namespace subcycle {

namespace {

struct Branches {
    double vmax;
    double vmin;
};

// Detected variances at t_max and t_min for the mixed state.
Branches branch_variances(double g, double eta, double energy, double vac2) {
    const double up = std::exp(2.0 * g * energy);
    const double down = std::exp(-2.0 * g * energy);
    return {vac2 * (eta * up + 1.0 - eta), vac2 * (eta * down + 1.0 - eta)};
}

// Residual vector over both branches; parameters x = (log(g E_ref), theta).
struct SweepResiduals {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<SweepPoint>* points;
    std::vector<double> w_max;
    std::vector<double> w_min;
    double e_ref;
    double vac2;
    double sn2;
    double ref;

    int inputs() const { return 2; }
    int values() const { return static_cast<int>(2 * points->size()); }

    double g_of(const Eigen::VectorXd& x) const { return std::exp(x[0]) / e_ref; }
    static double eta_of(const Eigen::VectorXd& x) { return std::pow(std::sin(x[1]), 2); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        const double g = g_of(x);
        const double eta = eta_of(x);
        for (std::size_t i = 0; i < points->size(); ++i) {
            const SweepPoint& p = (*points)[i];
            const Branches v = branch_variances(g, eta, p.pump_energy, vac2);
            r[2 * i] = w_max[i] * (std::sqrt(sn2 + v.vmax) / ref - 1.0 - p.rdn_max);
            r[2 * i + 1] = w_min[i] * (std::sqrt(sn2 + v.vmin) / ref - 1.0 - p.rdn_min);
        }
        return 0;
    }

    // Jacobian with respect to (g, eta) when natural = true, else (x0, x1).
    void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& J, bool natural) const {
        const double g = g_of(x);
        const double eta = eta_of(x);
        const double dg = natural ? 1.0 : g;
        const double deta = natural ? 1.0 : std::sin(2.0 * x[1]);
        for (std::size_t i = 0; i < points->size(); ++i) {
            const double e = (*points)[i].pump_energy;
            const double up = std::exp(2.0 * g * e);
            const double down = std::exp(-2.0 * g * e);
            const Branches v = branch_variances(g, eta, e, vac2);
            const double smax = w_max[i] / (2.0 * ref * std::sqrt(sn2 + v.vmax));
            const double smin = w_min[i] / (2.0 * ref * std::sqrt(sn2 + v.vmin));
            J(2 * i, 0) = smax * vac2 * eta * 2.0 * e * up * dg;
            J(2 * i, 1) = smax * vac2 * (up - 1.0) * deta;
            J(2 * i + 1, 0) = -smin * vac2 * eta * 2.0 * e * down * dg;
            J(2 * i + 1, 1) = smin * vac2 * (down - 1.0) * deta;
        }
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
        jacobian(x, J, false);
        return 0;
    }
};

}  // namespace

double FitResult::squeezing_at(double pump_energy) const { return 1.0 - std::exp(-g * pump_energy); }

std::pair<double, double> forward_model(double g, double eta, double pump_energy, const VacuumStats& vacuum,
                                        const DetectionParams& det) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("forward_model: eta outside [0, 1]");
    if (!(g >= 0.0)) throw std::invalid_argument("forward_model: g must be non-negative");
    const Branches v = branch_variances(g, eta, pump_energy, vacuum.delta_e_vac * vacuum.delta_e_vac);
    return {rdn_exact(std::sqrt(v.vmax), vacuum, det), rdn_exact(std::sqrt(v.vmin), vacuum, det)};
}

FitResult fit_sweep(const std::vector<SweepPoint>& points, const VacuumStats& vacuum, const DetectionParams& det) {
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!std::isfinite(p.pump_energy) || !std::isfinite(p.rdn_max) || !std::isfinite(p.rdn_min) ||
            !std::isfinite(p.stderr_max) || !std::isfinite(p.stderr_min)) {
            throw std::invalid_argument("fit_sweep: non-finite sweep point");
        }
        distinct.insert(p.pump_energy);
    }
    if (distinct.size() < 3) throw std::invalid_argument("fit_sweep: >= 3 distinct energies required");

    const bool weighted = std::all_of(points.begin(), points.end(),
                                      [](const SweepPoint& p) { return p.stderr_max > 0.0 && p.stderr_min > 0.0; });

    SweepResiduals fn;
    fn.points = &points;
    fn.e_ref = *distinct.rbegin();
    if (!(fn.e_ref > 0.0)) throw std::invalid_argument("fit_sweep: energies must include a positive value");
    fn.vac2 = vacuum.delta_e_vac * vacuum.delta_e_vac;
    fn.sn2 = det.delta_e_sn * det.delta_e_sn;
    fn.ref = std::sqrt(fn.sn2 + fn.vac2);
    for (const auto& p : points) {
        fn.w_max.push_back(weighted ? 1.0 / p.stderr_max : 1.0);
        fn.w_min.push_back(weighted ? 1.0 / p.stderr_min : 1.0);
    }

    constexpr double kStartsGE[] = {0.1, 0.4, 1.0, 2.0};
    constexpr double kStartsEta[] = {0.2, 0.5, 0.9};

    Eigen::VectorXd best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (double ge : kStartsGE) {
        for (double eta0 : kStartsEta) {
            Eigen::VectorXd x(2);
            x << std::log(ge), std::asin(std::sqrt(eta0));
            Eigen::LevenbergMarquardt<SweepResiduals> lm(fn);
            lm.parameters.xtol = 1e-15;
            lm.parameters.ftol = 1e-15;
            lm.parameters.maxfev = 2000;
            lm.minimize(x);
            Eigen::VectorXd r(fn.values());
            fn(x, r);
            const double cost = r.squaredNorm();
            if (std::isfinite(cost) && cost < best_cost) {
                best_cost = cost;
                best = x;
            }
        }
    }
    if (best.size() != 2) throw NumericalError("fit_sweep: no start converged");

    FitResult res;
    res.g = fn.g_of(best);
    res.eta = SweepResiduals::eta_of(best);

    double ss = 0.0;
    for (const auto& p : points) {
        const auto [mx, mn] = forward_model(res.g, res.eta, p.pump_energy, vacuum, det);
        ss += (mx - p.rdn_max) * (mx - p.rdn_max) + (mn - p.rdn_min) * (mn - p.rdn_min);
    }
    res.residual_rms = std::sqrt(ss / static_cast<double>(2 * points.size()));

    Eigen::MatrixXd J(fn.values(), 2);
    fn.jacobian(best, J, true);
    const Eigen::Matrix2d info = J.transpose() * J;
    if (std::abs(info.determinant()) > 0.0) {
        Eigen::Matrix2d cov = info.inverse();
        if (!weighted) {
            const double dof = std::max(1.0, static_cast<double>(fn.values() - 2));
            cov *= best_cost / dof;
        }
        res.sigma_g = std::sqrt(std::max(0.0, cov(0, 0)));
        res.sigma_eta = std::sqrt(std::max(0.0, cov(1, 1)));
        const double denom = res.sigma_g * res.sigma_eta;
        res.corr_g_eta = denom > 0.0 ? cov(0, 1) / denom : 0.0;
    }

    for (const auto& p : points) {
        res.energies.push_back(p.pump_energy);
        res.squeezing_curve.push_back(res.squeezing_at(p.pump_energy));
    }
    return res;
}

std::vector<AsymmetryMetric> asymmetry_series(std::vector<SweepPoint> points) {
    if (points.empty()) throw std::invalid_argument("asymmetry_series: no points");
    std::stable_sort(points.begin(), points.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.pump_energy < b.pump_energy; });
    std::vector<AsymmetryMetric> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back({p.pump_energy, p.rdn_max + p.rdn_min});
    return out;
}

double product_invariant_check(const SqueezingProfile& plus, const SqueezingProfile& minus,
                               const VacuumStats& vacuum) {
    if (!(plus.grid == minus.grid) || !plus.has_noise() || !minus.has_noise()) {
        throw std::invalid_argument("product_invariant_check: grids or noise patterns do not match");
    }
    const double vac2 = vacuum.delta_e_vac * vacuum.delta_e_vac;
    return (plus.delta_e_rms * minus.delta_e_rms / vac2 - 1.0).abs().maxCoeff();
}

void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out,
                     const std::vector<std::pair<std::string, std::string>>& provenance) {
    io::write_comment_header(out, provenance);
    out << "E_nJ,rdn_max,stderr_max,rdn_min,stderr_min\n";
    for (const auto& p : points) {
        out << io::fmt12(p.pump_energy / units::nJ) << ',' << io::fmt12(p.rdn_max) << ',' << io::fmt12(p.stderr_max)
            << ',' << io::fmt12(p.rdn_min) << ',' << io::fmt12(p.stderr_min) << '\n';
    }
}

std::vector<SweepPoint> read_sweep_csv(std::istream& in) {
    const io::CsvTable t = io::read_csv(in);
    const std::size_t ce = t.column("E_nJ");
    const std::size_t cmax = t.column("rdn_max");
    const std::size_t cmin = t.column("rdn_min");
    std::size_t smax = t.columns.size();
    std::size_t smin = t.columns.size();
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (t.columns[i] == "stderr_max") smax = i;
        if (t.columns[i] == "stderr_min") smin = i;
    }
    std::vector<SweepPoint> pts;
    for (const auto& row : t.rows) {
        SweepPoint p;
        p.pump_energy = row[ce] * units::nJ;
        p.rdn_max = row[cmax];
        p.rdn_min = row[cmin];
        p.stderr_max = smax < row.size() ? row[smax] : 0.0;
        p.stderr_min = smin < row.size() ? row[smin] : 0.0;
        pts.push_back(p);
    }
    return pts;
}

}  // namespace subcycle
