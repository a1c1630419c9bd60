#pragma once

// Spectral action Tr f(D / Lambda) for the bundled test functions and the
// leading-order growth of the action for the Bost-Connes D~ and Cantor systems.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Dense>

#include "bc.hpp"
#include "cantor.hpp"
#include "errors.hpp"
#include "gas.hpp"
#include "linop.hpp"
#include "series.hpp"
#include "summation.hpp"

namespace ncqsm {

struct fit_quality_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TestKind { gaussian, exp_abs, signed_exp, user };

inline const char* to_string(TestKind k)
{
    switch (k) {
    case TestKind::gaussian: return "gaussian";
    case TestKind::exp_abs: return "exp_abs";
    case TestKind::signed_exp: return "signed_exp";
    case TestKind::user: return "user";
    }
    return "?";
}

// f on [0, inf) plus a parity; odd functions carry the sign of the eigenvalue.
class TestFunction {
public:
    static TestFunction gaussian() { return TestFunction(TestKind::gaussian, "gaussian", false, [](double t) { return std::exp(-t * t); }); }
    static TestFunction exp_abs() { return TestFunction(TestKind::exp_abs, "exp_abs", false, [](double t) { return std::exp(-t); }); }
    static TestFunction signed_exp()
    {
        return TestFunction(TestKind::signed_exp, "signed_exp", true, [](double t) { return std::exp(-t); });
    }

    // Even, positive, nonincreasing on [0, inf).
    static TestFunction user(std::string name, std::function<double(double)> f)
    {
        return TestFunction(TestKind::user, std::move(name), false, std::move(f));
    }

    // Piecewise-linear through (t_i, f_i), t_0 = 0, zero beyond the last node.
    static TestFunction tabulated(std::string name, std::vector<double> t, std::vector<double> f)
    {
        if (t.size() != f.size() || t.size() < 2 || t.front() != 0.0)
            throw domain_error("tabulated test function: need >= 2 nodes starting at t = 0");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i > 0 && !(t[i] > t[i - 1]))
                throw domain_error("tabulated test function: nodes must increase");
            if (f[i] < 0.0 || (i > 0 && f[i] > f[i - 1]))
                throw domain_error("tabulated test function: values must be nonnegative and nonincreasing");
        }
        auto eval = [t, f](double x) {
            if (x >= t.back())
                return 0.0;
            const auto it = std::upper_bound(t.begin(), t.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
            const double w = (x - t[i]) / (t[i + 1] - t[i]);
            return (1.0 - w) * f[i] + w * f[i + 1];
        };
        TestFunction out(TestKind::user, std::move(name), false, eval);
        out.nodes_ = std::move(t);
        out.node_values_ = std::move(f);
        return out;
    }

    TestFunction scaled(double c) const
    {
        TestFunction out = *this;
        auto base = f_;
        out.f_ = [base, c](double t) { return c * base(t); };
        out.scale_ *= c;
        for (auto& v : out.node_values_)
            v *= c;
        return out;
    }

    TestKind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    bool odd() const noexcept { return odd_; }
    double scale() const noexcept { return scale_; }

    double on_half_line(double t) const { return f_(t); }

    double operator()(double t) const { return odd_ && t < 0 ? -f_(-t) : f_(std::abs(t)); }

    // f_k = int_0^inf f(v) v^{k-1} dv
    double momentum(double k) const
    {
        if (!(k > 0.0))
            throw domain_error("momentum: order must be positive");
        switch (kind_) {
        case TestKind::gaussian: return scale_ * 0.5 * boost::math::tgamma(0.5 * k);
        case TestKind::exp_abs:
        case TestKind::signed_exp: return scale_ * boost::math::tgamma(k);
        case TestKind::user: break;
        }
        if (!nodes_.empty()) {
            // exact on each linear piece
            compensated_sum s;
            for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
                const double a = nodes_[i], b = nodes_[i + 1];
                const double slope = (node_values_[i + 1] - node_values_[i]) / (b - a);
                const double c0 = node_values_[i] - slope * a;
                s.add(c0 * (std::pow(b, k) - std::pow(a, k)) / k + slope * (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1));
            }
            return s.value();
        }
        boost::math::quadrature::exp_sinh<double> integrator;
        const auto f = f_;
        return integrator.integrate([&f, k](double v) { return f(v) * std::pow(v, k - 1.0); }, 1e-12);
    }

    // sup_{x > 0} x^s f(x)
    double weighted_sup(double s) const
    {
        switch (kind_) {
        case TestKind::gaussian: return scale_ * std::pow(0.5 * s, 0.5 * s) * std::exp(-0.5 * s);
        case TestKind::exp_abs:
        case TestKind::signed_exp: return scale_ * std::pow(s, s) * std::exp(-s);
        case TestKind::user: break;
        }
        double best = 0.0;
        for (double x = 1e-6; x < 1e8; x *= 1.005)
            best = std::max(best, std::pow(x, s) * std::abs(f_(x)));
        return best;
    }

private:
    TestFunction(TestKind kind, std::string name, bool odd, std::function<double(double)> f)
        : kind_(kind), name_(std::move(name)), odd_(odd), f_(std::move(f))
    {
    }

    TestKind kind_;
    std::string name_;
    bool odd_;
    std::function<double(double)> f_;
    double scale_ = 1.0;
    std::vector<double> nodes_;
    std::vector<double> node_values_;
};

// Eigenvalues of D as |lambda| with a sign and a multiplicity. A zero
// eigenvalue keeps the sign of F on its eigenvector.
struct SpectralLine {
    double magnitude = 0.0;
    int sign = 1;
    double multiplicity = 1.0;
};

struct SignedSpectrum {
    std::vector<SpectralLine> lines;
    std::string source;

    void sort_by_magnitude()
    {
        std::stable_sort(lines.begin(), lines.end(),
                         [](const SpectralLine& a, const SpectralLine& b) { return a.magnitude < b.magnitude; });
    }
};

// D = F |D| with both operators diagonal in the same basis.
inline SignedSpectrum signed_spectrum(const TruncatedOperator& abs_d, const TruncatedOperator& sign)
{
    if (abs_d.structure() != Structure::diagonal || sign.structure() != Structure::diagonal)
        throw structural_error("signed_spectrum: |D| and F must be diagonal");
    detail::require_same_basis(abs_d, sign, "signed_spectrum");
    SignedSpectrum s;
    s.source = abs_d.tag();
    for (std::size_t k = 0; k < abs_d.dim(); ++k) {
        const double f = sign.diagonal_values()[k].real();
        if (f == 0.0)
            continue;
        s.lines.push_back({std::abs(abs_d.diagonal_values()[k].real()), f > 0 ? 1 : -1, 1.0});
    }
    s.sort_by_magnitude();
    return s;
}

inline SignedSpectrum signed_spectrum(std::span<const double> eigenvalues)
{
    SignedSpectrum s;
    s.source = "list";
    for (double v : eigenvalues)
        s.lines.push_back({std::abs(v), v < 0 ? -1 : 1, 1.0});
    s.sort_by_magnitude();
    return s;
}

// D = F H on l^2(1..N): |D| = log n, F = Liouville.
inline SignedSpectrum bc_spectrum(const BCRepresentation& rep)
{
    return signed_spectrum(hamiltonian(rep), liouville_sign(rep));
}

// |D~| = n on l^2(1..N), F = Liouville.
inline SignedSpectrum bc_tilde_spectrum(const BCRepresentation& rep)
{
    auto s = signed_spectrum(hamiltonian(rep), liouville_sign(rep));
    for (auto& l : s.lines)
        l.magnitude = std::round(std::exp(l.magnitude));
    s.sort_by_magnitude();
    s.source = "bc_tilde:" + rep.tag();
    return s;
}

// |D| = log n on squarefree n <= N, F = Moebius sign.
inline SignedSpectrum gas_spectrum(const FermionicBasis& basis)
{
    return signed_spectrum(gas_abs_dirac(basis), mobius_sign(basis));
}

// lambda_n = d_n^3 with multiplicity m_n, n = 0..M; no grading.
inline SignedSpectrum cantor_spectrum(unsigned g, unsigned depth)
{
    const auto f = build_filtration(g, depth);
    SignedSpectrum s;
    s.source = "cantor:g" + std::to_string(g) + ":M" + std::to_string(depth);
    for (unsigned n = 0; n <= depth; ++n)
        s.lines.push_back({f.lambdas[n].convert_to<double>(), 1, f.mults[n].convert_to<double>()});
    return s;
}

// Sum_k f(lambda_k / Lambda), ascending |lambda|, compensated.
inline SeriesValue spectral_action(const SignedSpectrum& spec, const TestFunction& f, double lambda,
                                   std::optional<double> lambda_cap = std::nullopt)
{
    if (!(lambda > 0.0))
        throw domain_error("spectral_action: Lambda must be positive");
    if (lambda_cap && lambda > *lambda_cap)
        throw domain_error("spectral_action: Lambda = " + std::to_string(lambda) + " exceeds the cutoff " +
                           std::to_string(*lambda_cap));
    compensated_sum acc;
    for (const auto& l : spec.lines) {
        const double v = f.on_half_line(l.magnitude / lambda) * l.multiplicity;
        acc.add(f.odd() ? l.sign * v : v);
    }
    SeriesValue out;
    out.value = acc.value();
    out.terms_used = spec.lines.size();
    out.tail_bound = 8.0 * std::numeric_limits<double>::epsilon() * acc.abs_sum();
    return out;
}

enum class ActionSystem { bc_tilde, cantor };

inline const char* to_string(ActionSystem s) { return s == ActionSystem::bc_tilde ? "bc_tilde" : "cantor"; }

// Truncated spectrum plus a bound on the omitted part of Tr f(|D| / Lambda)
// for nonnegative nonincreasing f.
struct ActionModel {
    ActionSystem system = ActionSystem::bc_tilde;
    unsigned g = 2;
    std::size_t n_max = 0; // bc_tilde
    unsigned depth = 0;    // cantor
    SignedSpectrum spectrum;

    double tail(const TestFunction& f, double lambda) const
    {
        if (system == ActionSystem::bc_tilde) {
            // Sum_{n > N} f(n / Lambda) <= Lambda int_{N/Lambda}^inf f
            const double x0 = static_cast<double>(n_max) / lambda;
            if (f.kind() == TestKind::gaussian)
                return f.scale() * lambda * 0.5 * std::sqrt(std::numbers::pi) * std::erfc(x0);
            if (f.kind() == TestKind::exp_abs || f.kind() == TestKind::signed_exp)
                return f.scale() * lambda * std::exp(-x0);
            boost::math::quadrature::exp_sinh<double> integrator;
            return lambda * integrator.integrate([&f, x0](double u) { return f.on_half_line(x0 + u); }, 1e-12);
        }
        // m_n f(lambda_n / Lambda) <= sup(x f) Lambda m_n / lambda_n
        return f.weighted_sup(1.0) * lambda * detail::cantor_tail(g, 1.0, depth);
    }
};

inline ActionModel bc_tilde_model(std::size_t n_max)
{
    ActionModel m;
    m.system = ActionSystem::bc_tilde;
    m.n_max = n_max;
    m.spectrum.source = "bc_tilde:l2(1.." + std::to_string(n_max) + ")";
    m.spectrum.lines.reserve(n_max);
    for (std::size_t n = 1; n <= n_max; ++n)
        m.spectrum.lines.push_back({static_cast<double>(n), 1, 1.0});
    return m;
}

inline ActionModel cantor_model(unsigned g, unsigned depth)
{
    ActionModel m;
    m.system = ActionSystem::cantor;
    m.g = g;
    m.depth = depth;
    m.spectrum = cantor_spectrum(g, depth);
    return m;
}

inline SeriesValue model_action(const ActionModel& m, const TestFunction& f, double lambda)
{
    if (f.odd())
        throw domain_error("model_action: the growth check takes an even test function");
    auto v = spectral_action(m.spectrum, f, lambda);
    v.tail_bound += m.tail(f, lambda);
    return v;
}

struct SlopeFit {
    ActionSystem system = ActionSystem::bc_tilde;
    std::string function;
    std::vector<double> grid;
    std::vector<double> traces;
    std::vector<double> tails;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    unsigned harmonics = 0;
    double expected_exponent = 0.0;
    double fitted_coefficient = 0.0;   // e^{intercept}
    double expected_coefficient = 0.0; // f_k Res_{s=k} zeta_D
};

inline constexpr double min_fit_r2 = 0.999;

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points)
{
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw domain_error("geometric_grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    return out;
}

// Least-squares fit of log Tr f(|D| / Lambda) against log Lambda. For the
// Cantor system the complex poles 1/3 + 2 pi i k / (3 log(2g-1)) add a
// log-periodic factor; its first `harmonics` Fourier modes enter as extra
// regressors.
inline SlopeFit asymptotic_slope(const ActionModel& m, const TestFunction& f, const std::vector<double>& grid,
                                 std::optional<unsigned> harmonics = std::nullopt, bool require_quality = true)
{
    if (grid.size() < 3)
        throw domain_error("asymptotic_slope: grid needs at least 3 points");
    if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() <= 0.0)
        throw domain_error("asymptotic_slope: grid must be positive and sorted");
    if (std::log10(grid.back() / grid.front()) < 1.5)
        throw domain_error("asymptotic_slope: grid spans less than 1.5 decades");

    SlopeFit fit;
    fit.system = m.system;
    fit.function = f.name();
    fit.grid = grid;
    fit.harmonics = harmonics.value_or(m.system == ActionSystem::cantor ? 4u : 0u);
    for (double lambda : grid) {
        const auto v = model_action(m, f, lambda);
        if (v.tail_bound > 0.01 * std::abs(v.value.real()))
            throw truncation_error("asymptotic_slope: trace not converged at Lambda = " + std::to_string(lambda));
        fit.traces.push_back(v.value.real());
        fit.tails.push_back(v.tail_bound);
    }

    const auto rows = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index cols = 2 + 2 * static_cast<Eigen::Index>(fit.harmonics);
    if (rows <= cols)
        throw domain_error("asymptotic_slope: grid too small for the number of regressors");
    const double omega = m.system == ActionSystem::cantor ? 2.0 * std::numbers::pi / (3.0 * std::log(2.0 * m.g - 1.0)) : 0.0;
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double x = std::log(grid[static_cast<std::size_t>(i)]);
        a(i, 0) = 1.0;
        a(i, 1) = x;
        for (Eigen::Index k = 1; k <= static_cast<Eigen::Index>(fit.harmonics); ++k) {
            a(i, 2 * k) = std::cos(static_cast<double>(k) * omega * x);
            a(i, 2 * k + 1) = std::sin(static_cast<double>(k) * omega * x);
        }
        y(i) = std::log(fit.traces[static_cast<std::size_t>(i)]);
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    fit.intercept = coef(0);
    fit.slope = coef(1);
    const double mean = y.mean();
    const double ss_res = (y - a * coef).squaredNorm();
    const double ss_tot = (y.array() - mean).square().sum();
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.fitted_coefficient = std::exp(fit.intercept);

    if (m.system == ActionSystem::bc_tilde) {
        fit.expected_exponent = 1.0;
        fit.expected_coefficient = f.momentum(1.0); // Res_{s=1} zeta = 1
    } else {
        const auto pole = dirac_zeta_poles(m.g, 0).front();
        fit.expected_exponent = pole.location.real();
        fit.expected_coefficient = f.momentum(pole.location.real()) * pole.residue.real();
    }
    if (require_quality && fit.r2 < min_fit_r2)
        throw fit_quality_error("asymptotic_slope: R^2 = " + std::to_string(fit.r2) + " below " +
                                std::to_string(min_fit_r2));
    return fit;
}

} // namespace ncqsm
