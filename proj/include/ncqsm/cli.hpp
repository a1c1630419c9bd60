#pragma once

// The ncqsm command-line front end: subcommands per module, JSON reports
// with a schema version, CSV export of grids, golden-file comparison.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>
#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "action.hpp"
#include "arith.hpp"
#include "bc.hpp"
#include "boundary_qsm.hpp"
#include "cantor.hpp"
#include "errors.hpp"
#include "gas.hpp"
#include "linop.hpp"

namespace ncqsm::cli {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_failure = 2, exit_capacity = 3, exit_usage = 64 };

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Report {
    std::string command;
    json config = json::object();
    json result = json::object();
    json rows = json::array();
    json checks = json::array();
    std::vector<std::string> failing;

    void certify(const std::string& name, bool ok)
    {
        checks.push_back({{"name", name}, {"pass", ok}});
        if (!ok)
            failing.push_back(name);
    }

    json document(const std::string& timestamp) const
    {
        json doc = {{"schema", schema_version}, {"command", command}, {"config", config},
                    {"result", result},         {"checks", checks},   {"pass", failing.empty()},
                    {"failing", failing},       {"timestamp", timestamp}};
        if (!rows.empty())
            doc["rows"] = rows;
        return doc;
    }
};

namespace detail {

inline std::size_t parse_count(const std::string& text, const char* what)
{
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size())
            throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw usage_error(std::string(what) + ": not a number: '" + text + "'");
    }
    if (!(v >= 1.0) || v > 1e12 || v != std::floor(v))
        throw usage_error(std::string(what) + ": expected a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        out.push_back(item);
    return out;
}

inline std::vector<double> parse_grid(const std::string& text, const char* what)
{
    std::vector<double> out;
    for (const auto& item : split(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw usage_error(std::string(what) + ": not a number: '" + item + "'");
        }
    }
    if (out.empty())
        throw usage_error(std::string(what) + ": grid is empty");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1]))
            throw usage_error(std::string(what) + ": grid must be strictly increasing");
    return out;
}

inline std::vector<std::size_t> parse_counts(const std::string& text, const char* what)
{
    std::vector<std::size_t> out;
    for (const auto& item : split(text))
        out.push_back(parse_count(item, what));
    if (out.empty())
        throw usage_error(std::string(what) + ": list is empty");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1]))
            throw usage_error(std::string(what) + ": list must be strictly increasing");
    return out;
}

inline QZ parse_rational(const std::string& text)
{
    try {
        return QZ::parse(text);
    } catch (const std::exception& e) {
        throw usage_error(e.what());
    }
}

inline json series_json(const SeriesValue& v)
{
    return {{"value", v.value.real()}, {"value_imag", v.value.imag()}, {"tail_bound", v.tail_bound},
            {"terms", v.terms_used}};
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string csv_cell(const json& v)
{
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos)
            return s;
        std::string q = "\"";
        for (char c : s)
            q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    if (v.is_null())
        return "";
    return v.dump();
}

// One row per grid point; columns from the first row, in key order.
inline std::string to_csv(const json& rows)
{
    std::ostringstream out;
    if (rows.empty())
        return out.str();
    std::vector<std::string> cols;
    for (const auto& [k, _] : rows.front().items())
        cols.push_back(k);
    for (std::size_t i = 0; i < cols.size(); ++i)
        out << (i ? "," : "") << csv_cell(cols[i]);
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << (i ? "," : "") << (row.contains(cols[i]) ? csv_cell(row[cols[i]]) : "");
        out << "\n";
    }
    return out.str();
}

inline json without_timestamp(json doc)
{
    doc.erase("timestamp");
    return doc;
}

inline unsigned thread_count()
{
    if (const char* env = std::getenv("NCQSM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return static_cast<unsigned>(n);
    }
    return 1;
}

} // namespace detail

// Option storage; strings are parsed after CLI11 so that malformed values
// map to the usage exit code with a precise message.
struct Knobs {
    std::string out, csv, golden, profile = "desk";
    std::string n_terms = "1000000", s = "2", beta = "2", r = "1/2", coeff = "mobius";
    std::string n = "2", sizes = "100,1000,10000", max_gen = "30", rs = "0,1/2,1/3";
    std::string depths = "10,100,1000,10000", cutoffs = "2,3,4", gamma = "a", convention = "paper_literal";
    std::string system = "bc_tilde", function = "gaussian", criteria;
    std::string kms_partner;
    unsigned g = 2, depth = 0, cutoff = 3; // depth 0: the command's default
    int count = 10, harmonics = -1;
    double step = 0.1, t = 1.0, lo = 10.0, hi = 316.22776601683796, points = 16;
};

using Command = std::function<void(Report&, const Knobs&)>;

namespace detail {

inline unsigned depth_or(const Knobs& k, unsigned fallback) { return k.depth ? k.depth : fallback; }

} // namespace detail

namespace commands {

inline void arith_series(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto grid = detail::parse_grid(k.s, "--s");
    const std::map<std::string, ArithCoeff> kinds{{"one", ArithCoeff::one},
                                                  {"mobius", ArithCoeff::mobius},
                                                  {"liouville", ArithCoeff::liouville},
                                                  {"abs_mobius", ArithCoeff::abs_mobius}};
    rep.config = {{"coeff", k.coeff}, {"N", n}, {"s", grid}};
    const auto table = sieve(n);
    for (double s : grid) {
        auto row = detail::series_json(dirichlet_series(table, kinds.at(k.coeff), s, n));
        row["s"] = s;
        rep.rows.push_back(row);
    }
    rep.result = {{"series", rep.rows}};
}

inline void arith_polylog(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto grid = detail::parse_grid(k.s, "--s");
    const QZ r = detail::parse_rational(k.r);
    rep.config = {{"r", r.str()}, {"N", n}, {"s", grid}};
    for (double s : grid) {
        auto row = detail::series_json(polylog_root_of_unity(r, s, n));
        row["s"] = s;
        rep.rows.push_back(row);
    }
    rep.result = {{"polylog", rep.rows}};
}

inline void bc_gibbs(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto grid = detail::parse_grid(k.beta, "--beta");
    const QZ r = detail::parse_rational(k.r);
    const bool strict = k.profile == "strict";
    rep.config = {{"r", r.str()}, {"N", n}, {"beta", grid}, {"profile", k.profile}};
    const BCRepresentation bc(n, 1, strict);
    for (double beta : grid) {
        const auto a = gibbs_state(BCMonomial::e(r), beta, bc);
        const auto b = gibbs_state_mobius_form(r, beta, bc);
        auto row = detail::series_json(a);
        row["beta"] = beta;
        row["mobius_path"] = detail::series_json(b);
        row["path_difference"] = std::abs(a.value - b.value);
        rep.rows.push_back(row);
        rep.certify("paths agree within tails at beta=" + acceptance::detail::fmt(beta),
                    std::abs(a.value - b.value) <= a.tail_bound + b.tail_bound);
    }
    rep.result = grid.size() == 1 ? rep.rows.front() : json{{"states", rep.rows}};
}

inline void bc_kms(Report& rep, const Knobs& k)
{
    const auto n_max = detail::parse_count(k.n_terms, "--N");
    const auto n = detail::parse_count(k.n, "--n");
    const auto grid = detail::parse_grid(k.beta, "--beta");
    const bool strict = k.profile == "strict";
    BCMonomial b = BCMonomial::mu_star(n);
    if (!k.kms_partner.empty())
        b.x = GroupRingElement::e(detail::parse_rational(k.kms_partner));
    rep.config = {{"N", n_max}, {"n", n}, {"beta", grid}, {"e", k.kms_partner}, {"profile", k.profile}};
    const BCRepresentation bc(n_max, 1, strict);
    for (double beta : grid)
        for (const bool twisted : {false, true}) {
            const auto a = BCMonomial::mu(n);
            const auto res = twisted ? twisted_kms_residual(a, b, beta, bc) : kms_residual(a, b, beta, bc);
            rep.rows.push_back({{"beta", beta},
                                {"kind", twisted ? "twisted" : "plain"},
                                {"residual", res.residual},
                                {"tolerance", res.tolerance},
                                {"tail_bound", res.tail_bound},
                                {"clipped_mass", res.clipped_mass},
                                {"pass", res.pass}});
            rep.certify(std::string(twisted ? "twisted" : "plain") + " KMS at beta=" + acceptance::detail::fmt(beta),
                        res.pass);
        }
    rep.result = {{"monomial_a", BCMonomial::mu(n).str()}, {"monomial_b", b.str()}, {"residuals", rep.rows}};
}

inline void certificate_checks(Report& rep, std::uint64_t n, const std::vector<double>& twisted)
{
    const double log_n = std::log(static_cast<double>(n));
    bool equal = !twisted.empty();
    for (double v : twisted)
        equal = equal && std::abs(v - log_n) <= 1e-10;
    rep.certify("twisted norm = log n", equal);
}

inline void bc_certificate(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n, "--n");
    const auto sizes = detail::parse_counts(k.sizes, "--sizes");
    rep.config = {{"n", n}, {"sizes", sizes}};
    const auto c = twisted_commutator_certificate(n, sizes);
    for (std::size_t i = 0; i < sizes.size(); ++i)
        rep.rows.push_back({{"N", sizes[i]},
                            {"twisted", c.twisted[i]},
                            {"untwisted", c.untwisted[i]},
                            {"lipschitz", c.lipschitz[i]}});
    rep.result = {{"liouville_n", c.liouville_n}, {"norms", rep.rows}};
    certificate_checks(rep, n, c.twisted);
    if (c.liouville_n == -1)
        rep.certify("untwisted norm strictly increasing", strictly_increasing(c.untwisted));
}

inline void bc_theta(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto grid = detail::parse_grid(k.beta, "--beta");
    rep.config = {{"N", n}, {"beta", grid}};
    std::vector<double> eig(n);
    for (std::size_t i = 1; i <= n; ++i)
        eig[i - 1] = std::log(static_cast<double>(i));
    const auto scan = summability_scan(eig, SummabilityKind::theta, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double bound = bc_theta_bound(grid[i]);
        rep.rows.push_back({{"beta", grid[i]},
                            {"trace", scan.traces[i].real()},
                            {"bound", bound},
                            {"exact_integral_bound", bc_theta_bound_exact_integral(grid[i])}});
        rep.certify("theta trace <= 1 + sqrt(pi) e^(1/(4 beta)) at beta=" + acceptance::detail::fmt(grid[i]),
                    scan.traces[i].real() <= bound);
    }
    rep.result = {{"traces", rep.rows}};
}

inline void gas_relations(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto max_gen = detail::parse_count(k.max_gen, "--max-gen");
    std::vector<QZ> rs;
    for (const auto& s : detail::split(k.rs))
        rs.push_back(detail::parse_rational(s));
    json rs_json = json::array();
    for (const auto& r : rs)
        rs_json.push_back(r.str());
    rep.config = {{"N", n}, {"max_gen", max_gen}, {"r", rs_json}};
    const auto report = relation_suite(n, max_gen, rs);
    for (const auto& res : report.results) {
        rep.rows.push_back({{"relation", res.relation_id},
                            {"pass", res.pass},
                            {"witness_column", res.witness.column},
                            {"witness_row", res.witness.row}});
        if (!res.pass)
            rep.certify(res.relation_id, false);
    }
    rep.certify("all relations", report.failures() == 0);
    rep.result = {{"relations", report.results.size()}, {"failures", report.failures()}};
}

inline void gas_witten(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n_terms, "--N");
    const auto grid = detail::parse_grid(k.beta, "--beta");
    rep.config = {{"N", n}, {"beta", grid}};
    const FermionicBasis basis(n);
    for (double beta : grid) {
        const auto w = witten_index(beta, basis);
        const double exact = 1.0 / boost::math::zeta(beta);
        auto row = detail::series_json(w);
        row["beta"] = beta;
        row["inverse_zeta"] = exact;
        rep.rows.push_back(row);
        rep.certify("Witten index = 1/zeta(beta) within tail at beta=" + acceptance::detail::fmt(beta),
                    w.contains(exact, 4.0 * std::numeric_limits<double>::epsilon()));
    }
    rep.result = grid.size() == 1 ? rep.rows.front() : json{{"indices", rep.rows}};
}

inline void gas_certificate(Report& rep, const Knobs& k)
{
    const auto n = detail::parse_count(k.n, "--n");
    const auto sizes = detail::parse_counts(k.sizes, "--sizes");
    rep.config = {{"n", n}, {"sizes", sizes}};
    const auto c = gas_twisted_certificate(n, sizes);
    for (std::size_t i = 0; i < sizes.size(); ++i)
        rep.rows.push_back({{"N", sizes[i]},
                            {"twisted", c.twisted[i]},
                            {"untwisted", c.untwisted[i]},
                            {"lipschitz", c.lipschitz[i]}});
    rep.result = {{"mobius_n", c.mobius_n}, {"norms", rep.rows}};
    certificate_checks(rep, n, c.twisted);
    if (c.mobius_n == -1)
        rep.certify("Lipschitz-twisted norm strictly increasing", strictly_increasing(c.lipschitz));
}

inline void cantor_zeta(Report& rep, const Knobs& k)
{
    const unsigned depth = detail::depth_or(k, 40);
    const auto grid = detail::parse_grid(k.s, "--s");
    rep.config = {{"g", k.g}, {"M", depth}, {"s", grid}};
    for (double s : grid) {
        const auto z = dirac_zeta(k.g, s, depth);
        const cplx closed = dirac_zeta_closed_form(k.g, s);
        auto row = detail::series_json(z);
        row["s"] = s;
        row["closed_form"] = closed.real();
        row["gap"] = std::abs(z.value - closed);
        rep.rows.push_back(row);
        rep.certify("closed form within tail at s=" + acceptance::detail::fmt(s), z.contains(closed));
    }
    rep.result = {{"abscissa", cantor_abscissa}, {"zeta", rep.rows}};
}

inline void cantor_probe(Report& rep, const Knobs& k)
{
    const auto grid = detail::parse_grid(k.s, "--s");
    const auto depths = detail::parse_counts(k.depths, "--depths");
    std::vector<unsigned> ds(depths.begin(), depths.end());
    rep.config = {{"g", k.g}, {"s", grid}, {"depths", depths}};
    json probes = json::array();
    for (double s : grid) {
        const auto p = abscissa_probe(k.g, s, ds);
        for (std::size_t i = 0; i < ds.size(); ++i)
            rep.rows.push_back({{"s", s}, {"depth", ds[i]}, {"partial_sum", p.partial_sums[i]}});
        probes.push_back({{"s", s}, {"term_ratio", p.term_ratio}, {"monotone", p.monotone}, {"diverges", p.diverges}});
    }
    rep.result = {{"probes", probes}};
}

inline void cantor_grading(Report& rep, const Knobs& k)
{
    const unsigned depth = detail::depth_or(k, 1);
    rep.config = {{"g", k.g}, {"M", depth}};
    const auto c = commutant_dimension(k.g, depth);
    rep.result = {{"commutant_dimension", c.dimension}, {"d_M", c.expected}, {"all_diagonal", c.all_diagonal}};
    rep.certify("commutant dimension = d_M", c.dimension == c.expected);
    const auto scan = grading_scan(k.g, depth);
    rep.result["scan"] = {{"cases", scan.cases},
                          {"min_norm", scan.min_norm},
                          {"min_norm_nontrivial", scan.min_norm_nontrivial},
                          {"argmin_grading", scan.argmin_grading},
                          {"argmin_sign", scan.argmin_sign}};
    rep.certify("minimal anticommutator norm > 0", scan.min_norm > 0.0);
}

inline void boundary_kms(Report& rep, const Knobs& k)
{
    const Word gamma = parse_word(k.gamma, k.g);
    rep.config = {{"g", k.g}, {"gamma", k.gamma}, {"step", k.step}, {"count", k.count}};
    const auto a = CrossedMonomial::group(gamma, k.g);
    const auto scan = ps_kms_scan(a, adjoint(a), k.step, k.count);
    for (std::size_t i = 0; i < scan.betas.size(); ++i)
        rep.rows.push_back({{"beta", scan.betas[i]}, {"residual", scan.residuals[i]}});
    rep.result = {{"critical_exponent", critical_exponent(k.g)}, {"zeros", scan.zeros}, {"scan", rep.rows}};
    rep.certify("KMS at the critical exponent only", scan.zeros == 1);
}

inline void boundary_time(Report& rep, const Knobs& k)
{
    const unsigned depth = detail::depth_or(k, 4);
    rep.config = {{"g", k.g}, {"depth", depth}, {"L", k.cutoff}, {"t", k.t}};
    const CrossedSpace space(k.g, depth, k.cutoff);
    double worst = 0.0;
    for (unsigned len = 0; len < depth && len <= k.cutoff && len <= 2; ++len)
        for (const auto& gamma : enumerate_words(k.g, len)) {
            const double res = time_evolution_residual(CrossedMonomial::group(gamma, k.g), k.t, space);
            rep.rows.push_back({{"gamma", word_string(gamma)}, {"residual", res}});
            worst = std::max(worst, res);
        }
    rep.result = {{"max_residual", worst}, {"residuals", rep.rows}};
    rep.certify("time evolution residual < 1e-10", worst < 1e-10);
}

inline void boundary_certificate(Report& rep, const Knobs& k)
{
    const unsigned depth = detail::depth_or(k, 4);
    const auto ls = detail::parse_counts(k.cutoffs, "--L");
    std::vector<unsigned> cutoffs(ls.begin(), ls.end());
    const auto conv = k.convention == "absolute" ? AbsConvention::absolute : AbsConvention::paper_literal;
    rep.config = {{"g", k.g}, {"gamma", k.gamma}, {"depth", depth}, {"L", ls}, {"convention", k.convention}};
    const auto c = type3_triple_certificate(Homomorphism::exponent_sum(k.g), parse_word(k.gamma, k.g), k.g, depth,
                                            cutoffs, conv);
    double lo = c.twisted.front(), hi = c.twisted.front();
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        rep.rows.push_back({{"L", cutoffs[i]},
                            {"twisted", c.twisted[i]},
                            {"untwisted", c.untwisted[i]},
                            {"sign_commutator", c.sign_commutator[i]},
                            {"sign_conjugation", c.sign_conjugation[i]},
                            {"sigma_squared", c.sigma_squared[i]}});
        lo = std::min(lo, c.twisted[i]);
        hi = std::max(hi, c.twisted[i]);
        rep.certify("twisted norm <= sup |B| at L=" + std::to_string(cutoffs[i]),
                    c.twisted[i] <= c.busemann_sup + 1e-12);
    }
    rep.result = {{"ell_gamma", c.ell_gamma}, {"busemann_sup", c.busemann_sup}, {"norms", rep.rows}};
    rep.certify("twisted norm constant in L", hi - lo <= 1e-12);
    if (c.ell_gamma % 2 != 0)
        rep.certify("untwisted norm strictly increasing in L", strictly_increasing(c.untwisted));
}

inline void action_slope(Report& rep, const Knobs& k)
{
    if (!(k.points >= 3) || k.points != std::floor(k.points))
        throw usage_error("--points: expected an integer >= 3");
    const auto grid = geometric_grid(k.lo, k.hi, static_cast<std::size_t>(k.points));
    const TestFunction f = k.function == "exp_abs" ? TestFunction::exp_abs() : TestFunction::gaussian();
    ActionModel model;
    if (k.system == "cantor") {
        model = cantor_model(k.g, detail::depth_or(k, 24));
        rep.config = {{"system", k.system}, {"g", k.g}, {"depth", detail::depth_or(k, 24)}};
    } else {
        const auto n = detail::parse_count(k.n_terms, "--N");
        model = bc_tilde_model(n);
        rep.config = {{"system", k.system}, {"N", n}};
    }
    rep.config["function"] = k.function;
    rep.config["grid"] = {{"lo", k.lo}, {"hi", k.hi}, {"points", grid.size()}};
    std::optional<unsigned> harmonics;
    if (k.harmonics >= 0)
        harmonics = static_cast<unsigned>(k.harmonics);
    rep.config["harmonics"] = k.harmonics;
    const auto fit = asymptotic_slope(model, f, grid, harmonics);
    for (std::size_t i = 0; i < fit.grid.size(); ++i)
        rep.rows.push_back({{"lambda", fit.grid[i]}, {"trace", fit.traces[i]}, {"tail", fit.tails[i]}});
    rep.result = {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"r2", fit.r2},
                  {"harmonics", fit.harmonics},
                  {"expected_exponent", fit.expected_exponent},
                  {"fitted_coefficient", fit.fitted_coefficient},
                  {"expected_coefficient", fit.expected_coefficient}};
    rep.certify("slope within 0.02 of the expected exponent", std::abs(fit.slope - fit.expected_exponent) <= 0.02);
}

inline void suite(Report& rep, const Knobs& k)
{
    std::vector<int> ids;
    if (k.criteria.empty()) {
        for (int i = 1; i <= acceptance::criterion_count; ++i)
            ids.push_back(i);
    } else {
        for (const auto& s : detail::split(k.criteria)) {
            const auto id = detail::parse_count(s, "--criterion");
            if (id > static_cast<std::size_t>(acceptance::criterion_count))
                throw usage_error("--criterion: expected 1.." + std::to_string(acceptance::criterion_count));
            ids.push_back(static_cast<int>(id));
        }
    }
    rep.config = {{"profile", k.profile}, {"criteria", ids}};
    json criteria = json::array();
    for (const auto& r : acceptance::run_criteria(ids, acceptance::parse_profile(k.profile), detail::thread_count())) {
        json checks = json::array();
        for (const auto& c : r.checks) {
            json row = {{"criterion", r.id}, {"name", c.name}, {"bound", c.bound}, {"relation", c.relation},
                        {"pass", c.pass}};
            row["value"] = c.timing ? json(nullptr) : json(c.value);
            checks.push_back(row);
            rep.rows.push_back(row);
        }
        criteria.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass()}, {"error", r.error},
                            {"checks", checks}});
        for (const auto& name : r.failing())
            rep.failing.push_back("criterion " + std::to_string(r.id) + ": " + name);
        rep.checks.push_back({{"name", "criterion " + std::to_string(r.id)}, {"pass", r.pass()}});
    }
    rep.result = {{"criteria", criteria}};
}

} // namespace commands

namespace detail {

inline void finish(const Report& rep, const Knobs& k, std::ostream& out, std::ostream& err, int& code)
{
    const json doc = rep.document(utc_timestamp());
    const std::string text = doc.dump(2) + "\n";
    if (k.out.empty())
        out << text;
    else
        write_atomic(k.out, text);
    if (!k.csv.empty())
        write_atomic(k.csv, to_csv(rep.rows));
    for (const auto& c : rep.checks)
        err << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "\n";
    for (const auto& f : rep.failing)
        err << "failing: " << f << "\n";
    code = rep.failing.empty() ? exit_ok : exit_failure;
    if (!k.golden.empty()) {
        std::ifstream in(k.golden);
        if (!in)
            throw usage_error("--golden: cannot read '" + k.golden + "'");
        const json golden = without_timestamp(json::parse(in));
        const json mine = without_timestamp(doc);
        if (golden != mine) {
            const json patch = json::diff(golden, mine);
            err << "golden mismatch at " << patch.front().value("path", std::string("/")) << "\n";
            code = exit_failure;
        } else {
            err << "golden match\n";
        }
    }
}

} // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    Knobs k;
    CLI::App app{"ncqsm: certificates and scans for the noncommutative QSM library", "ncqsm"};
    app.require_subcommand(1);
    app.add_option("--out", k.out, "write the JSON report here (atomically) instead of stdout");
    app.add_option("--csv", k.csv, "write the report's grid rows as CSV");
    app.add_option("--golden", k.golden, "compare against a golden JSON report, ignoring the timestamp");
    app.add_option("--profile", k.profile, "tolerance profile")->check(CLI::IsMember({"desk", "strict"}));

    std::vector<std::pair<CLI::App*, std::pair<std::string, Command>>> leaves;
    const auto group = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->require_subcommand(1);
        sub->fallthrough();
        return sub;
    };
    const auto leaf = [&](CLI::App* parent, const char* name, const char* help, Command cmd) {
        auto* sub = parent->add_subcommand(name, help);
        sub->fallthrough();
        leaves.push_back({sub, {parent->get_name() + " " + name, std::move(cmd)}});
        return sub;
    };

    auto* arith = group("arith", "Dirichlet series and polylogarithms");
    auto* series = leaf(arith, "series", "Sum c(n) n^-s", commands::arith_series);
    series->add_option("--coeff", k.coeff)->check(CLI::IsMember({"one", "mobius", "liouville", "abs_mobius"}));
    series->add_option("--s", k.s, "comma-separated increasing grid");
    series->add_option("--N", k.n_terms, "number of terms");
    auto* poly = leaf(arith, "polylog", "Li_s(e(r))", commands::arith_polylog);
    poly->add_option("--r", k.r);
    poly->add_option("--s", k.s);
    poly->add_option("--N", k.n_terms);

    auto* bc = group("bc", "Bost-Connes system");
    auto* gibbs = leaf(bc, "gibbs", "Gibbs state of e(r) by both paths", commands::bc_gibbs);
    gibbs->add_option("--r", k.r);
    gibbs->add_option("--beta", k.beta);
    gibbs->add_option("--N", k.n_terms);
    auto* kms = leaf(bc, "kms", "KMS residuals for (mu_n, [e(r)] mu_n^*)", commands::bc_kms);
    kms->add_option("--n", k.n);
    kms->add_option("--e", k.kms_partner, "put e(r) in front of mu_n^*");
    kms->add_option("--beta", k.beta);
    kms->add_option("--N", k.n_terms);
    auto* bcc = leaf(bc, "certificate", "twisted-commutator norms", commands::bc_certificate);
    bcc->add_option("--n", k.n);
    bcc->add_option("--sizes", k.sizes);
    auto* theta = leaf(bc, "theta", "theta-summability traces", commands::bc_theta);
    theta->add_option("--beta", k.beta);
    theta->add_option("--N", k.n_terms);

    auto* gas = group("gas", "Riemann gas");
    auto* rel = leaf(gas, "relations", "relation suite", commands::gas_relations);
    rel->add_option("--N", k.n_terms);
    rel->add_option("--max-gen", k.max_gen);
    rel->add_option("--r", k.rs);
    auto* witten = leaf(gas, "witten", "Witten index", commands::gas_witten);
    witten->add_option("--beta", k.beta);
    witten->add_option("--N", k.n_terms);
    auto* gasc = leaf(gas, "certificate", "twisted-commutator norms", commands::gas_certificate);
    gasc->add_option("--n", k.n);
    gasc->add_option("--sizes", k.sizes);

    auto* cantor = group("cantor", "spectral triple on the boundary of the free group tree");
    auto* zeta = leaf(cantor, "zeta", "zeta_D against the closed form", commands::cantor_zeta);
    zeta->add_option("--g", k.g);
    zeta->add_option("--M", k.depth);
    zeta->add_option("--s", k.s);
    auto* probe = leaf(cantor, "probe", "partial sums near the abscissa", commands::cantor_probe);
    probe->add_option("--g", k.g);
    probe->add_option("--s", k.s);
    probe->add_option("--depths", k.depths);
    auto* grading = leaf(cantor, "grading", "commutant and grading scan", commands::cantor_grading);
    grading->add_option("--g", k.g);
    grading->add_option("--M", k.depth);

    auto* boundary = group("boundary", "crossed-product QSM on the boundary");
    auto* bkms = leaf(boundary, "kms", "KMS scan around the critical exponent", commands::boundary_kms);
    bkms->add_option("--g", k.g);
    bkms->add_option("--gamma", k.gamma);
    bkms->add_option("--step", k.step);
    bkms->add_option("--count", k.count);
    auto* btime = leaf(boundary, "time", "time-evolution residuals for |gamma| <= 2", commands::boundary_time);
    btime->add_option("--g", k.g);
    btime->add_option("--depth", k.depth);
    btime->add_option("--L", k.cutoff);
    btime->add_option("--t", k.t);
    auto* bcert = leaf(boundary, "certificate", "type-III twisted-commutator norms", commands::boundary_certificate);
    bcert->add_option("--g", k.g);
    bcert->add_option("--gamma", k.gamma);
    bcert->add_option("--depth", k.depth);
    bcert->add_option("--L", k.cutoffs);
    bcert->add_option("--convention", k.convention)->check(CLI::IsMember({"paper_literal", "absolute"}));

    auto* action = group("action", "spectral action");
    auto* slope = leaf(action, "slope", "leading growth of Tr f(D / Lambda)", commands::action_slope);
    slope->add_option("--system", k.system)->check(CLI::IsMember({"bc_tilde", "cantor"}));
    slope->add_option("--function", k.function)->check(CLI::IsMember({"gaussian", "exp_abs"}));
    slope->add_option("--N", k.n_terms);
    slope->add_option("--g", k.g);
    slope->add_option("--depth", k.depth);
    slope->add_option("--lo", k.lo);
    slope->add_option("--hi", k.hi);
    slope->add_option("--points", k.points);
    slope->add_option("--harmonics", k.harmonics, "Fourier modes of the log-periodic factor (default: automatic)");

    auto* suite = app.add_subcommand("suite", "run the acceptance battery");
    suite->fallthrough();
    suite->add_option("--criterion", k.criteria, "comma-separated criterion ids (default: all)");
    leaves.push_back({suite, {"suite", commands::suite}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int rc = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        for (auto& [sub, entry] : leaves)
            if (sub->parsed()) {
                Report rep;
                rep.command = entry.first;
                entry.second(rep, k);
                int code = exit_ok;
                detail::finish(rep, k, out, err, code);
                return code;
            }
        err << app.help();
        return exit_usage;
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ncqsm::domain_error& e) {
        err << "domain error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ncqsm::capacity_error& e) {
        err << "capacity error: " << e.what() << "\n";
        return exit_capacity;
    } catch (const ncqsm::truncation_error& e) {
        err << "truncation error: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }
}

} // namespace ncqsm::cli
