#include "bosebox/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bosebox/canonical.hpp"
#include "bosebox/errors.hpp"
#include "bosebox/grandcanonical.hpp"
#include "bosebox/kac.hpp"
#include "bosebox/limits.hpp"

#include <unistd.h>

namespace bosebox::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void check_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
    if (!j.is_object()) bad(where.empty() ? "config" : where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            bad(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) bad(field, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) bad(field, "expected an integer");
    return j.get<int>();
}

std::vector<double> get_numbers(const json& j, const std::string& field) {
    if (!j.is_array()) bad(field, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
    return v;
}

void positive(double x, const std::string& field) {
    if (!(x > 0.0) || !std::isfinite(x)) bad(field, "must be positive and finite");
}

BoxGeometry geometry(const RunConfig& c, double v) { return BoxGeometry(c.alphas, v); }

// Scale s_V of the occupation numbers: V, or V^{2(1-alpha_1)} when alpha_1 > 1/2.
double occupation_scale(const BoxGeometry& g) {
    if (classify(g.alpha()).regime == Regime::TypeIII)
        return std::pow(g.volume(), 2.0 * (1.0 - g.alpha()[0]));
    return g.volume();
}

struct RowSink {
    std::string command;
    double volume;
    std::vector<ResultRow>& rows;
    void add(const std::string& q, double value, double err = 0.0, double param = 0.0,
             const std::string& mode = "") {
        rows.push_back({command, volume, q, mode, param, value, err});
    }
};

std::size_t mode_index(const SpectrumTable& t, const Mode& m) {
    auto k = t.index_of(m);
    if (!k) bad("mode", "mode " + to_string(m) + " lies above the spectral cutoff");
    return *k;
}

int particle_number(const RunConfig& c, double v) {
    const double n = std::llround(c.density() * v);
    if (n < 1) bad("rho", "round(rho V) must be at least 1");
    if (n > c.n_max && !c.allow_large_n)
        bad("cutoffs.n_max", "round(rho V) = " + std::to_string(std::int64_t(n)) +
                                 " exceeds n_max; set cutoffs.allow_large_n to proceed");
    return int(n);
}

std::shared_ptr<const SpectrumTable> spectrum_for(const RunConfig& c, const BoxGeometry& g) {
    return std::make_shared<const SpectrumTable>(gc_spectrum(g, c.beta, c.energy_tail_tol));
}

void rows_spectrum(const RunConfig& c, double v, std::vector<ResultRow>& out) {
    const auto g = geometry(c, v);
    RowSink s{"spectrum", v, out};
    s.add("ground_energy", g.ground_energy());
    SpectrumTable t = c.emax ? enumerate_below(g, *c.emax) : SpectrumTable{g, 0.0, 0.0, {}};
    if (c.emax) {
        if (t.entries.empty())
            std::cerr << "warning: emax " << *c.emax << " is below the ground energy "
                      << g.ground_energy() << " at V = " << v << "; table is empty\n";
    } else {
        // smallest gap cutoff holding spectrum_count modes
        double eta = g.axis_scale(0) * 4.0;
        for (;;) {
            t = enumerate_gaps_below(g, eta);
            if (int(t.size()) >= c.spectrum_count) break;
            eta *= 2.0;
        }
        t.entries.resize(std::size_t(c.spectrum_count));
    }
    s.add("mode_count", double(t.size()));
    for (const auto& e : t.entries) {
        const std::string m = to_string(e.mode);
        s.add("eigenvalue", e.energy, 0.0, 0.0, m);
        s.add("gap", e.gap, 0.0, 0.0, m);
    }
    for (double eta : c.eta_grid) {
        s.add("ids", ids(g, eta), 0.0, eta);
        if (eta >= 0.0) {
            const auto b = ids_bounds(g, eta);
            s.add("ids_lower", b.lower, 0.0, eta);
            s.add("ids_upper", b.upper, 0.0, eta);
            s.add("ids_limit", ids_limit(eta), 0.0, eta);
        }
    }
    s.add("ids_bounds_threshold", ids_bounds_threshold(g));
}

void rows_gc(const RunConfig& c, double v, std::vector<ResultRow>& out) {
    const auto g = geometry(c, v);
    RowSink s{"gc", v, out};
    const double rho = c.density();
    const auto rc = critical_density(c.beta);
    const auto spec = spectrum_for(c, g);
    const auto sol = solve_mu(*spec, rho, c.beta, c.solver_tol, c.max_iter);
    const std::size_t k = mode_index(*spec, c.mode);
    const double sv = occupation_scale(g);
    const double budget = sol.residual * rho + sol.tail_bound;
    const std::string m = to_string(c.mode);
    const Regime regime = classify(g.alpha()).regime;

    s.add("rho_c", rc.value, rc.quadrature_error);
    s.add("mode_count", double(spec->size()));
    s.add("mu", sol.mu, budget);
    s.add("mu_bar", sol.mu_bar, budget);
    s.add("density_residual", sol.residual, sol.tail_bound);
    const auto rcv = rho_c_finite(*spec, c.beta);
    s.add("rho_c_finite", rcv.value, rcv.tail_bound);
    s.add("occupation_scaled", mean_occupation(*spec, sol.mu_bar, k, c.beta) / sv, budget, 0.0, m);
    if (rho < rc.value) {
        s.add("limiting_mu_bar", limiting_mu_bar(rho, c.beta), rc.quadrature_error);
    } else if (rho > rc.value) {
        const double asym = mu_bar_asymptotic(g, rho, c.beta);
        s.add("mu_bar_asymptotic", asym, rc.quadrature_error);
        s.add("mu_bar_ratio", sol.mu_bar / asym, budget);
        if (regime == Regime::TypeII) {
            const auto a = solve_A(rho, c.beta);
            s.add("A", a.value, a.residual + a.tail_bound);
        }
        s.add("occupation_limit", gc_occupation_limit(regime, rho, c.mode, c.beta),
              rc.quadrature_error, 0.0, m);
    }
    for (double lambda : c.lambda_grid) {
        s.add("laplace_finite", gc_laplace_finite(*spec, sol.mu_bar, k, lambda / sv, c.beta), budget,
              lambda, m);
        if (rho > rc.value)
            s.add("laplace_limit", gc_laplace_limit(regime, rho, c.mode, lambda, c.beta),
                  rc.quadrature_error, lambda, m);
    }
}

void rows_canonical(const RunConfig& c, double v, std::vector<ResultRow>& out) {
    const auto g = geometry(c, v);
    RowSink s{"canonical", v, out};
    const int n = particle_number(c, v);
    const auto spec = spectrum_for(c, g);
    const auto ct = build_canonical(spec, c.beta, n, c.energy_tail_tol);
    const std::size_t k = mode_index(*spec, c.mode);
    const double sv = occupation_scale(g);
    const double trunc = ct.power_sum_tail[1] / v;
    const std::string m = to_string(c.mode);
    const double rho = c.density();
    const double rc = critical_density(c.beta).value;

    s.add("n", n);
    s.add("log_z", ct.log_z(n), trunc);
    const double mean = occupation_moment(ct, k, n, 1);
    s.add("occupation_mean", mean, trunc * v, 0.0, m);
    s.add("occupation_scaled", mean / sv, trunc * v / sv, 0.0, m);
    s.add("occupation_moment2", occupation_moment(ct, k, n, 2), trunc * v * n, 0.0, m);
    for (double lambda : c.lambda_grid)
        s.add("laplace_finite", occupation_laplace(ct, k, n, lambda / sv), trunc * v, lambda, m);
    s.add("generalized_condensate", generalized_condensate(ct, n, c.epsilon), trunc, c.epsilon);
    try {
        const auto p = p_coefficient(ct, k);
        s.add("p_coefficient", p.value, p.tail_bound, 0.0, m);
    } catch (const DomainError&) {
        std::cerr << "note: mode " << m << " is degenerate; p_coefficient skipped\n";
    }
    if (rho > rc) {
        switch (classify(g.alpha()).regime) {
            case Regime::TypeI:
                s.add("occupation_limit", canonical_occupation_typeI(c.mode, rho, rc), 0.0, 0.0, m);
                break;
            case Regime::TypeII:
                if (on_ladder(c.mode)) {
                    const int n1 = c.mode.n[0];
                    const auto lim = occupation_limit_typeII(
                        n1, rho, rc, gap_coefficients(n1, std::max(c.series_M, n1 + 2), c.beta));
                    s.add("occupation_limit", lim.value, lim.truncation_bound, 0.0, m);
                } else {
                    s.add("occupation_limit", 0.0, 0.0, 0.0, m);
                }
                break;
            case Regime::TypeIII:
                s.add("occupation_limit", canonical_occupation_typeIII(c.mode, rho, rc, c.beta), 0.0, 0.0, m);
                break;
        }
    }
}

void rows_kac(const RunConfig& c, double v, std::vector<ResultRow>& out) {
    const auto g = geometry(c, v);
    RowSink s{"kac", v, out};
    const double rho = c.density();
    const auto spec = spectrum_for(c, g);
    const auto sol = solve_mu(*spec, rho, c.beta, c.solver_tol, c.max_iter);
    const std::size_t k = mode_index(*spec, c.mode);
    const std::string m = to_string(c.mode);
    const double decay = 1.0 / (-std::expm1(c.beta * sol.mu_bar));
    int n_max = int(std::min<double>(c.n_max, rho * v + 10.0 * std::sqrt(rho * v) + 40.0 * decay));
    CanonicalTable ct;
    KacWeights w;
    for (;;) {
        ct = build_canonical(spec, c.beta, n_max, c.energy_tail_tol);
        try {
            w = kac_weights(ct, sol.mu_bar);
            break;
        } catch (const CutoffInsufficient&) {
            if (n_max >= c.n_max && !c.allow_large_n) throw;
            n_max *= 2;
        }
    }
    double mass = 0.0, mean = 0.0;
    for (int i = w.n_cut(); i >= 0; --i) {
        mass += w.weights[i];
        mean += i * w.weights[i];
    }
    const auto dens = gc_density(*spec, sol.mu_bar, c.beta);
    s.add("kac_n_cut", w.n_cut());
    s.add("kac_mass", mass, w.tail_bound);
    s.add("kac_mean_density", mean / v, w.tail_bound * n_max);
    s.add("gc_density", dens.value, dens.tail_bound);
    const auto law = limiting_kac_law(classify(g.alpha()).regime, rho, c.beta);
    for (double lambda : c.lambda_grid) {
        const auto d = decomposition_check(ct, w, k, lambda);
        s.add("decomposition_lhs", d.lhs, d.bound, lambda, m);
        s.add("decomposition_rhs", d.rhs, d.bound, lambda, m);
        double lt = 0.0;
        for (int i = w.n_cut(); i >= 0; --i) lt += w.weights[i] * std::exp(-lambda * i / v);
        s.add("kac_laplace_finite", lt, w.tail_bound, lambda);
        s.add("kac_laplace_limit", law.laplace(lambda), 0.0, lambda);
    }
}

void rows_fluct(const RunConfig& c, double v, std::vector<ResultRow>& out) {
    const auto g = geometry(c, v);
    RowSink s{"fluct", v, out};
    particle_number(c, v);
    const auto rows = fluctuation_convergence_check({g}, c.density(), c.lambda_grid, c.beta,
                                                    c.energy_tail_tol, c.gap_convention);
    if (!rows.empty()) {
        s.add("n", rows.front().n);
        s.add("rho_c_finite", rows.front().rho_c_v);
        s.add("centered_mean", rows.front().centered_mean);
    }
    for (const auto& r : rows) {
        s.add("fluct_finite", r.finite, 0.0, r.lambda);
        s.add("fluct_limit", r.limit, 0.0, r.lambda);
    }
}

using RowFn = void (*)(const RunConfig&, double, std::vector<ResultRow>&);

RowFn per_volume(const std::string& name) {
    if (name == "spectrum") return rows_spectrum;
    if (name == "gc") return rows_gc;
    if (name == "canonical") return rows_canonical;
    if (name == "kac") return rows_kac;
    if (name == "fluct") return rows_fluct;
    return nullptr;
}

std::vector<ResultRow> over_volumes(const RunConfig& c, RowFn f) {
    std::vector<ResultRow> rows;
    for (double v : c.volumes) f(c, v, rows);
    return rows;
}

}  // namespace

double RunConfig::density() const {
    if (rho) return *rho;
    return *rho_over_rho_c * critical_density(beta).value;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    check_keys(j, "", {"geometry", "beta", "rho", "rho_over_rho_c", "mode", "lambda_grid", "cutoffs",
                       "solver", "output", "spectrum", "canonical", "limits", "sweep"});
    const json* geo = find(j, "geometry");
    if (!geo) bad("geometry", "missing");
    check_keys(*geo, "geometry", {"alphas", "volume", "volume_sweep"});
    const json* al = find(*geo, "alphas");
    if (!al) bad("geometry.alphas", "missing");
    const auto a = get_numbers(*al, "geometry.alphas");
    if (a.size() != 3) bad("geometry.alphas", "expected 3 exponents");
    c.alphas = {a[0], a[1], a[2]};
    const json* vol = find(*geo, "volume");
    const json* sweep = find(*geo, "volume_sweep");
    if (bool(vol) == bool(sweep)) bad("geometry", "give exactly one of volume, volume_sweep");
    c.volumes = vol ? std::vector<double>{get_number(*vol, "geometry.volume")}
                    : get_numbers(*sweep, "geometry.volume_sweep");
    if (c.volumes.empty()) bad("geometry.volume_sweep", "empty");
    for (double v : c.volumes) {
        try {
            BoxGeometry(c.alphas, v);
        } catch (const DomainError& e) {
            bad("geometry", e.what());
        }
    }
    if (auto p = find(j, "beta")) c.beta = get_number(*p, "beta");
    positive(c.beta, "beta");
    const json* r = find(j, "rho");
    const json* rr = find(j, "rho_over_rho_c");
    if (bool(r) == bool(rr)) bad("rho", "give exactly one of rho, rho_over_rho_c");
    if (r) {
        c.rho = get_number(*r, "rho");
        positive(*c.rho, "rho");
    } else {
        c.rho_over_rho_c = get_number(*rr, "rho_over_rho_c");
        positive(*c.rho_over_rho_c, "rho_over_rho_c");
    }
    if (auto p = find(j, "mode")) {
        if (!p->is_array() || p->size() != 3) bad("mode", "expected 3 positive integers");
        for (int i = 0; i < 3; ++i) {
            c.mode.n[i] = get_int((*p)[i], "mode");
            if (c.mode.n[i] < 1) bad("mode", "quantum numbers must be >= 1");
        }
    }
    if (auto p = find(j, "lambda_grid")) c.lambda_grid = get_numbers(*p, "lambda_grid");
    if (auto p = find(j, "cutoffs")) {
        check_keys(*p, "cutoffs", {"energy_tail_tol", "series_M", "n_max", "allow_large_n"});
        if (auto q = find(*p, "energy_tail_tol"))
            c.energy_tail_tol = get_number(*q, "cutoffs.energy_tail_tol");
        if (auto q = find(*p, "series_M")) c.series_M = get_int(*q, "cutoffs.series_M");
        if (auto q = find(*p, "n_max")) c.n_max = get_int(*q, "cutoffs.n_max");
        if (auto q = find(*p, "allow_large_n")) {
            if (!q->is_boolean()) bad("cutoffs.allow_large_n", "expected a boolean");
            c.allow_large_n = q->get<bool>();
        }
    }
    positive(c.energy_tail_tol, "cutoffs.energy_tail_tol");
    if (c.series_M < 4) bad("cutoffs.series_M", "must be at least 4");
    if (c.n_max < 1) bad("cutoffs.n_max", "must be positive");
    if (auto p = find(j, "solver")) {
        check_keys(*p, "solver", {"tol", "max_iter"});
        if (auto q = find(*p, "tol")) c.solver_tol = get_number(*q, "solver.tol");
        if (auto q = find(*p, "max_iter")) c.max_iter = get_int(*q, "solver.max_iter");
    }
    positive(c.solver_tol, "solver.tol");
    if (c.max_iter < 1) bad("solver.max_iter", "must be positive");
    if (auto p = find(j, "output")) {
        check_keys(*p, "output", {"format", "path"});
        if (auto q = find(*p, "format")) {
            if (!q->is_string()) bad("output.format", "expected a string");
            c.format = q->get<std::string>();
        }
        if (auto q = find(*p, "path")) {
            if (!q->is_string()) bad("output.path", "expected a string");
            c.path = q->get<std::string>();
        }
    }
    if (c.format != "csv" && c.format != "json") bad("output.format", "must be csv or json");
    if (auto p = find(j, "spectrum")) {
        check_keys(*p, "spectrum", {"emax", "count", "eta_grid"});
        if (auto q = find(*p, "emax")) c.emax = get_number(*q, "spectrum.emax");
        if (auto q = find(*p, "count")) c.spectrum_count = get_int(*q, "spectrum.count");
        if (auto q = find(*p, "eta_grid")) c.eta_grid = get_numbers(*q, "spectrum.eta_grid");
    }
    if (c.spectrum_count < 1) bad("spectrum.count", "must be positive");
    if (auto p = find(j, "canonical")) {
        check_keys(*p, "canonical", {"epsilon"});
        if (auto q = find(*p, "epsilon")) c.epsilon = get_number(*q, "canonical.epsilon");
    }
    positive(c.epsilon, "canonical.epsilon");
    if (auto p = find(j, "limits")) {
        check_keys(*p, "limits", {"ladder_count", "gap_convention"});
        if (auto q = find(*p, "ladder_count")) c.ladder_count = get_int(*q, "limits.ladder_count");
        if (auto q = find(*p, "gap_convention")) {
            const std::string s = q->is_string() ? q->get<std::string>() : "";
            if (s == "exact")
                c.gap_convention = GapConvention::Exact;
            else if (s == "printed")
                c.gap_convention = GapConvention::Printed;
            else
                bad("limits.gap_convention", "must be exact or printed");
        }
    }
    if (c.ladder_count < 1) bad("limits.ladder_count", "must be positive");
    if (auto p = find(j, "sweep")) {
        check_keys(*p, "sweep", {"commands", "threads"});
        if (auto q = find(*p, "commands")) {
            if (!q->is_array()) bad("sweep.commands", "expected an array of command names");
            c.sweep_commands.clear();
            for (const auto& x : *q) {
                const std::string name = x.is_string() ? x.get<std::string>() : "";
                if (!per_volume(name)) bad("sweep.commands", "unknown command '" + name + "'");
                c.sweep_commands.push_back(name);
            }
        }
        if (auto q = find(*p, "threads")) c.threads = get_int(*q, "sweep.threads");
    }
    return c;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) bad("--override", "expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!node->is_object()) bad(key, "cannot descend into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

std::vector<ResultRow> cmd_spectrum(const RunConfig& c) { return over_volumes(c, rows_spectrum); }
std::vector<ResultRow> cmd_gc(const RunConfig& c) { return over_volumes(c, rows_gc); }
std::vector<ResultRow> cmd_canonical(const RunConfig& c) { return over_volumes(c, rows_canonical); }
std::vector<ResultRow> cmd_kac(const RunConfig& c) { return over_volumes(c, rows_kac); }
std::vector<ResultRow> cmd_fluct(const RunConfig& c) { return over_volumes(c, rows_fluct); }

std::vector<ResultRow> cmd_limits(const RunConfig& c) {
    std::vector<ResultRow> rows;
    RowSink s{"limits", 0.0, rows};
    const double rho = c.density();
    const auto rc = critical_density(c.beta);
    const RegimeLabel label = classify(c.alphas);
    const std::string m = to_string(c.mode);
    s.add("rho_c", rc.value, rc.quadrature_error);
    if (rho < rc.value) s.add("limiting_mu_bar", limiting_mu_bar(rho, c.beta), rc.quadrature_error);
    const auto law = limiting_kac_law(label.regime, rho, c.beta);
    for (double lambda : c.lambda_grid) s.add("kac_laplace_limit", law.laplace(lambda), 0.0, lambda);
    if (!(rho > rc.value)) return rows;

    switch (label.regime) {
        case Regime::TypeI: {
            s.add("canonical_occupation", canonical_occupation_typeI(c.mode, rho, rc.value), 0.0, 0.0, m);
            s.add("gc_occupation", gc_occupation_limit(label.regime, rho, c.mode, c.beta), 0.0, 0.0, m);
            for (double lambda : c.lambda_grid) {
                s.add("canonical_laplace", canonical_laplace_typeI(c.mode, lambda, rho, rc.value), 0.0,
                      lambda, m);
                s.add("gc_laplace", gc_laplace_limit(label.regime, rho, c.mode, lambda, c.beta), 0.0,
                      lambda, m);
            }
            const auto fs = fluctuation_setup(c.alphas);
            s.add("gamma", fs.gamma);
            for (double lambda : c.lambda_grid) {
                for (int d = 1; d <= 3; ++d)
                    if (lambda > g_domain_lower(d, c.beta, c.gap_convention))
                        s.add("g" + std::to_string(d), g_function(d, lambda, c.beta, c.gap_convention),
                              0.0, lambda);
                if (lambda > g_domain_lower(1, c.beta, c.gap_convention))
                    s.add("fluctuation_law", fluctuation_law(fs.label, lambda, c.beta, c.gap_convention),
                          0.0, lambda);
            }
            break;
        }
        case Regime::TypeII: {
            const auto a = solve_A(rho, c.beta);
            const double a_err = a.residual + a.tail_bound;
            s.add("A", a.value, a_err);
            double can_sum = 0.0, gc_sum = 0.0, can_err = 0.0;
            for (int n = 1; n <= c.ladder_count; ++n) {
                const Mode ladder{{n, 1, 1}};
                const std::string lm = to_string(ladder);
                const auto coeffs = gap_coefficients(n, std::max(c.series_M, n + 2), c.beta);
                const auto can = occupation_limit_typeII(n, rho, rc.value, coeffs);
                const double gc = gc_occupation_limit(label.regime, rho, ladder, c.beta);
                s.add("canonical_ladder", can.value, can.truncation_bound, n, lm);
                s.add("gc_ladder", gc, a_err, n, lm);
                can_sum += can.value;
                can_err += can.truncation_bound;
                gc_sum += gc;
            }
            s.add("canonical_ladder_sum", can_sum, can_err, c.ladder_count);
            s.add("gc_ladder_sum", gc_sum, a_err, c.ladder_count);
            s.add("excess_density", rho - rc.value, rc.quadrature_error);
            if (on_ladder(c.mode)) {
                const int n1 = c.mode.n[0];
                const auto coeffs = gap_coefficients(n1, std::max(c.series_M, n1 + 2), c.beta);
                for (double lambda : c.lambda_grid) {
                    const auto l = canonical_laplace_typeII(n1, lambda, rho, rc.value, coeffs);
                    s.add("canonical_laplace", l.value, l.truncation_bound, lambda, m);
                    s.add("gc_laplace", gc_laplace_limit(label.regime, rho, c.mode, lambda, c.beta),
                          a_err, lambda, m);
                }
            }
            break;
        }
        case Regime::TypeIII: {
            s.add("canonical_occupation", canonical_occupation_typeIII(c.mode, rho, rc.value, c.beta), 0.0, 0.0, m);
            s.add("gc_occupation", gc_occupation_limit(label.regime, rho, c.mode, c.beta), 0.0, 0.0, m);
            for (double lambda : c.lambda_grid) {
                s.add("canonical_laplace", canonical_laplace_typeIII(c.mode, lambda, rho, rc.value, c.beta), 0.0,
                      lambda, m);
                s.add("gc_laplace", gc_laplace_limit(label.regime, rho, c.mode, lambda, c.beta), 0.0,
                      lambda, m);
            }
            break;
        }
    }
    return rows;
}

std::vector<ResultRow> cmd_sweep(const RunConfig& c) {
    std::vector<RowFn> fns;
    for (const auto& name : c.sweep_commands) fns.push_back(per_volume(name));
    const std::size_t nv = c.volumes.size();
    std::vector<std::vector<ResultRow>> parts(nv);
    std::vector<std::exception_ptr> errors(nv);
    auto work = [&](std::size_t i) {
        try {
            for (RowFn f : fns) f(c, c.volumes[i], parts[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    unsigned workers = c.threads > 0 ? unsigned(c.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, unsigned(nv)));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < nv;) work(i);
        });
    for (auto& t : pool) t.join();
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < nv; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        rows.insert(rows.end(), parts[i].begin(), parts[i].end());
    }
    return rows;
}

std::vector<ResultRow> run_command(const std::string& name, const RunConfig& c) {
    if (name == "limits") return cmd_limits(c);
    if (name == "sweep") return cmd_sweep(c);
    if (RowFn f = per_volume(name)) return over_volumes(c, f);
    bad("command", "unknown command '" + name + "'");
}

std::string format_number(double x) {
    if (!std::isfinite(x)) throw NumericalFailure("non-finite value in output");
    if (x == 0.0) x = 0.0;  // drop the sign of negative zero
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, 16);
    return std::string(buf, r.ptr);
}

std::string render(const std::vector<ResultRow>& rows, const RunConfig& c, const std::string& format) {
    std::ostringstream os;
    const double rho = c.density();
    if (format == "csv") {
        os << "command,alpha1,alpha2,alpha3,volume,beta,rho,quantity,mode,param,value,error_budget\n";
        for (const auto& r : rows) {
            os << r.command << ',' << format_number(c.alphas[0]) << ',' << format_number(c.alphas[1])
               << ',' << format_number(c.alphas[2]) << ',' << format_number(r.volume) << ','
               << format_number(c.beta) << ',' << format_number(rho) << ',' << r.quantity << ','
               << r.mode << ',' << format_number(r.param) << ',' << format_number(r.value) << ','
               << format_number(r.error_budget) << '\n';
        }
        return os.str();
    }
    if (format != "json") bad("--format", "must be csv or json");
    os << "{\"rows\": [";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << (i ? ",\n  " : "\n  ") << "{\"command\": " << json(r.command).dump()
           << ", \"alpha1\": " << format_number(c.alphas[0])
           << ", \"alpha2\": " << format_number(c.alphas[1])
           << ", \"alpha3\": " << format_number(c.alphas[2])
           << ", \"volume\": " << format_number(r.volume) << ", \"beta\": " << format_number(c.beta)
           << ", \"rho\": " << format_number(rho) << ", \"quantity\": " << json(r.quantity).dump()
           << ", \"mode\": " << json(r.mode).dump() << ", \"param\": " << format_number(r.param)
           << ", \"value\": " << format_number(r.value)
           << ", \"error_budget\": " << format_number(r.error_budget) << "}";
    }
    os << "\n]}\n";
    return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw std::runtime_error("write to " + tmp.string() + " failed");
        }
    }
    fs::rename(tmp, target);
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Finite-volume perfect Bose gas in anisotropic Dirichlet boxes"};
    app.require_subcommand(1, 1);
    app.fallthrough();  // subcommands inherit this at creation
    std::string config_path, out_path, format, emax_text;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_path, "output file (default: output.path, else stdout)");
    app.add_option("--format", format, "csv or json");
    app.add_option("--override", overrides, "key=value applied to the configuration");
    const char* names[] = {"spectrum", "gc", "canonical", "kac", "limits", "fluct", "sweep"};
    for (const char* n : names) {
        auto* sub = app.add_subcommand(n);
        if (std::string(n) == "spectrum") sub->add_option("--emax", emax_text, "energy cutoff");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) bad("--config", "cannot open '" + config_path + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            bad(config_path, e.what());
        }
        for (const auto& o : overrides) apply_override(j, o);
        if (!emax_text.empty()) apply_override(j, "spectrum.emax=" + emax_text);
        cfg = parse_config(j);
        if (!format.empty()) cfg.format = format;
        if (cfg.format != "csv" && cfg.format != "json") bad("--format", "must be csv or json");
        if (!out_path.empty()) cfg.path = out_path;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        const auto rows = run_command(command, cfg);
        const std::string text = render(rows, cfg, cfg.format);
        if (cfg.path.empty())
            std::cout << text;
        else
            write_atomic(cfg.path, text);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace bosebox::cli
