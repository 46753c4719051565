// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracrisk/config.hpp"
#include "fracrisk/dataset.hpp"
#include "fracrisk/generator.hpp"
#include "fracrisk/mittag_leffler.hpp"
#include "fracrisk/risk_mc.hpp"
#include "fracrisk/runs.hpp"
#include "fracrisk/solver.hpp"
#include "fracrisk/stable.hpp"

using namespace fracrisk;

namespace {

std::string source_path(const std::string& rel) { return std::string(FRACRISK_SOURCE_DIR) + "/" + rel; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Probability that x0 + mu t + s W_t stays above 0 up to T, starting at distance d.
double drifted_bm_survival(double d, double mu, double s, double T) {
    const double st = s * std::sqrt(T);
    return normal_cdf((d + mu * T) / st) - std::exp(-2.0 * mu * d / (s * s)) * normal_cdf((-d + mu * T) / st);
}

double ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double dmax = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        dmax = std::max(dmax, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * dmax;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

// Bound checks over every field produced by the other criteria.
struct BoundLedger {
    std::size_t fields = 0;
    std::size_t values = 0;
    std::size_t violations = 0;
    double min_value = 1.0;
    double max_value = 0.0;

    void add(const RiskField& f) {
        const auto st = field_stats(f);
        ++fields;
        values += f.values.size();
        violations += st.bound_violations;
        min_value = std::min(min_value, st.min_value);
        max_value = std::max(max_value, st.max_value);
    }
};

BoundLedger bounds;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Case study: PDE against MC on [-3, 1), then a variant that must differ.
Outcome case_study(const std::string& config, const std::function<void(RunConfig&)>& variant) {
    const auto cfg = load_config(source_path(config));
    const auto field = solve_config(cfg, cfg.kind);
    bounds.add(field);
    const auto table = mc_config_table(cfg, cfg.kind, 1);
    const auto cmp = compare_field(field, table, cfg.compare_tolerance, cfg.compare_ci_multiplier);
    bool on_range = true;
    for (const auto& r : cmp.rows) on_range = on_range && r.x[0] >= -3.0 && r.x[0] < 1.0;

    auto other_cfg = cfg;
    variant(other_cfg);
    const auto other = solve_config(other_cfg, other_cfg.kind);
    bounds.add(other);
    const double gap = max_field_difference(field, other, -3.0, 1.0);

    std::ostringstream d;
    d << "rows=" << cmp.rows.size() << " max_abs_diff=" << fmt("%.4f", cmp.max_abs_diff) << " failures=" << cmp.failures
      << " frac_within_3ci=" << fmt("%.3f", cmp.frac_within_ci) << " variant_gap=" << fmt("%.4f", gap);
    return {cmp.passed() && on_range && !cmp.rows.empty() && gap > 0.05, d.str()};
}

GeneratorMatrix relaxation_cell(double lambda) {
    const auto sys = SystemSpec::constant({-lambda}, 0.0, StableParams::one_dimensional(2.0, 0.5, 0.5), SubordinatorParams(1.0));
    return build_generator(sys, Grid({Axis{0.0, 1.0, 1}}), SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {0.0}}),
                           Region::safe_interior);
}

Outcome mittag_leffler_oracle() {
    double worst = 0.0;
    for (double lambda : {0.5, 2.0}) {
        for (double beta : {0.4, 0.7}) {
            const auto F = solve_safety(relaxation_cell(lambda), SubordinatorParams(beta), uniform_time_grid(1.0, 1e-3));
            bounds.add(F);
            for (std::size_t t = 1; t < F.n_times(); ++t) {
                const double ref = mittag_leffler(beta, -lambda * std::pow(F.times[t], beta));
                worst = std::max(worst, std::abs(F.at(t, 0) - ref) / ref);
            }
        }
    }
    return {worst <= 1e-3, "max_rel_err=" + fmt("%.3e", worst)};
}

Outcome reductions() {
    // Memoryless L1 solve against a hand-rolled dense backward Euler.
    const auto fig1 = load_config(source_path("configs/fig1.json"));
    const auto gen = config_generator(fig1, RiskKind::recovery);
    const double dt = 1e-3;
    const auto F = solve_safety(gen, SubordinatorParams(1.0), uniform_time_grid(0.1, dt));
    bounds.add(F);
    const Eigen::MatrixXd q(gen.rates());
    const auto n = q.rows();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) / dt - q);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    double euler_gap = 0.0;
    for (std::size_t t = 1; t < F.n_times(); ++t) {
        u = lu.solve(u / dt);
        for (Eigen::Index i = 0; i < n; ++i) {
            euler_gap = std::max(euler_gap, std::abs(F.at(t, gen.cell_of_unknown()[static_cast<std::size_t>(i)]) - u[i]));
        }
    }

    // Gaussian rows are the classical central differences, drift included.
    const double sigma = 0.6, f = 0.3, h = 0.01;
    const auto sys = SystemSpec::constant({f}, sigma, StableParams::one_dimensional(2.0, 0.5, 0.5), SubordinatorParams(1.0));
    const auto g2 = build_generator(sys, Grid({Axis{-3.0, 1.0, 400}}),
                                    SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {-10.0}}), Region::safe_interior);
    const double diff = sigma * sigma / (h * h);
    double row_gap = 0.0;
    for (Eigen::Index i = 1; i + 1 < 400; ++i) {
        const auto& r = g2.rates();
        row_gap = std::max({row_gap, std::abs(r.coeff(i, i + 1) - (diff + f / (2 * h))) / diff,
                            std::abs(r.coeff(i, i - 1) - (diff - f / (2 * h))) / diff, std::abs(r.coeff(i, i) + 2 * diff) / diff});
        if (r.row(i).nonZeros() != 3) row_gap = 1.0;
    }

    // Recovery against one minus safety of the complement region.
    const auto fig2 = load_config(source_path("configs/fig2.json"));
    const auto g3 = config_generator(fig2, RiskKind::recovery);
    const auto times = uniform_time_grid(0.5, 1e-3);
    const auto R = solve_recovery(g3, fig2.subordinator(), times);
    const auto S = solve_safety(g3, fig2.subordinator(), times);
    bounds.add(R);
    bounds.add(S);
    double dual_gap = 0.0;
    for (std::size_t t = 0; t < R.n_times(); ++t) {
        for (std::size_t c = 0; c < R.grid.size(); ++c) {
            if (R.in_region[c]) dual_gap = std::max(dual_gap, std::abs(R.at(t, c) + S.at(t, c) - 1.0));
        }
    }
    return {euler_gap <= 1e-12 && row_gap <= 1e-12 && dual_gap <= 1e-12,
            "backward_euler=" + fmt("%.2e", euler_gap) + " central_rows=" + fmt("%.2e", row_gap) + " duality=" + fmt("%.2e", dual_gap)};
}

Outcome symbols() {
    const double sigma = 0.7, f = 0.3;
    const Grid grid({Axis{0.0, 2.0, 1024}});
    GeneratorOptions periodic;
    periodic.periodic = true;
    double worst = 0.0;
    for (double alpha : {0.7, 1.0, 1.5, 2.0}) {
        for (double skew : {-1.0, 0.0, 1.0}) {
            const auto st = StableParams::one_dimensional(alpha, 0.5 * (1 + skew), 0.5 * (1 - skew));
            const auto sys = SystemSpec::constant({f}, sigma, st, SubordinatorParams(1.0));
            const auto g = build_generator(sys, grid, SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {-1e9}}),
                                           Region::safe_interior, periodic);
            for (double xi : {std::numbers::pi, 2 * std::numbers::pi}) {
                const auto expected = std::complex<double>(0.0, xi * f) - std::pow(sigma, alpha) * characteristic_exponent(st, xi);
                worst = std::max(worst, std::abs(symbol_check(g, xi) - expected) / std::abs(expected));
            }
        }
    }
    return {worst <= 0.05, "h=1/512 max_rel_err=" + fmt("%.4f", worst)};
}

Outcome sampler_statistics() {
    const std::size_t n = 1000000;
    double cf_worst = 0.0;  // largest deviation in units of SE
    std::vector<double> draws(n);
    std::uint64_t stream = 1;
    for (double alpha : {0.7, 1.0, 1.5, 2.0}) {
        for (double skew : {-1.0, 0.0, 0.8}) {
            RngStream rng(20240610, stream++);
            for (auto& x : draws) x = sample_standard_stable(alpha, skew, rng);
            const auto st = StableParams::one_dimensional(alpha, 0.5 * (1 + skew), 0.5 * (1 - skew));
            for (double xi : {0.5, 1.0, 2.0}) {
                double sr = 0.0, si = 0.0, sr2 = 0.0, si2 = 0.0;
                for (double x : draws) {
                    const double c = std::cos(xi * x), s = std::sin(xi * x);
                    sr += c;
                    si += s;
                    sr2 += c * c;
                    si2 += s * s;
                }
                const double nn = static_cast<double>(n), mr = sr / nn, mi = si / nn;
                const double se_r = std::sqrt(std::max(sr2 / nn - mr * mr, 0.0) / nn);
                const double se_i = std::sqrt(std::max(si2 / nn - mi * mi, 0.0) / nn);
                const auto exact = std::exp(-characteristic_exponent(st, xi));
                cf_worst = std::max(cf_worst, std::abs(mr - exact.real()) / std::max(se_r, 1e-300));
                if (se_i > 0.0) cf_worst = std::max(cf_worst, std::abs(mi - exact.imag()) / se_i);
                else if (std::abs(mi - exact.imag()) > 1e-12) cf_worst = 1e9;
            }
        }
    }

    double mean_worst = 0.0;
    for (double beta : {0.4, 0.7}) {
        for (double T : {0.5, 1.0}) {
            RngStream rng(20240611, stream++);
            double s = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = sample_inverse_subordinator(beta, T, rng);
                s += e;
                s2 += e * e;
            }
            const double mean = s / static_cast<double>(n);
            const double se = std::sqrt((s2 / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
            mean_worst = std::max(mean_worst, std::abs(mean - std::pow(T, beta) / std::tgamma(1.0 + beta)) / se);
        }
    }

    // Direct draw (T / D_1)^beta against first passage of a sampled path.
    const std::size_t nk = 100000;
    std::vector<double> direct(nk), via_path(nk);
    RngStream a(20240612, 1), b(20240612, 2);
    for (auto& x : direct) x = sample_inverse_subordinator(0.7, 1.0, a);
    for (auto& x : via_path) {
        double u_max = 4.0;
        for (;;) {
            RngStream trial = b;
            const auto path = sample_subordinator_path(0.7, u_max, 1e-3, trial);
            if (path.values.back() > 1.0) {
                x = invert_path(path, 1.0);
                b = trial;
                break;
            }
            u_max *= 2.0;
        }
    }
    const double ks_p = ks_pvalue(direct, via_path);

    // beta = 1/2: P(D_1 <= t) = erfc(1 / (2 sqrt t)).
    double tail_worst = 0.0;
    RngStream c(20240613, 1);
    std::vector<double> d1(n);
    for (auto& x : d1) x = sample_subordinator_increment(0.5, 1.0, c);
    for (double t : {0.25, 1.0, 4.0, 16.0}) {
        const double expected = std::erf(1.0 / (2.0 * std::sqrt(t)));  // P(D_1 > t)
        const double p = static_cast<double>(std::count_if(d1.begin(), d1.end(), [t](double x) { return x > t; })) /
                         static_cast<double>(n);
        tail_worst = std::max(tail_worst, std::abs(p - expected) / std::sqrt(expected * (1 - expected) / static_cast<double>(n)));
    }

    return {cf_worst <= 3.0 && mean_worst <= 3.0 && ks_p > 0.01 && tail_worst <= 3.0,
            "cf_max_se=" + fmt("%.2f", cf_worst) + " mean_max_se=" + fmt("%.2f", mean_worst) + " ks_p=" + fmt("%.3f", ks_p) +
                " tail_max_se=" + fmt("%.2f", tail_worst)};
}

Outcome brownian_first_passage() {
    // Safe set {x < 1}, drift toward the barrier.
    const double f = 0.3, sigma = 0.6;
    const auto sys = SystemSpec::constant({f}, sigma, StableParams::one_dimensional(2.0, 0.5, 0.5), SubordinatorParams(1.0));
    const auto safe = SafeSet::from_spec({BarrierSpec::Kind::half_line_below, {1.0}});
    GeneratorOptions o;
    o.far_field = FarField::clamp;
    const auto gen = build_generator(sys, Grid({Axis{-4.0, 1.0, 500}}), safe, Region::safe_interior, o);
    const auto F = solve_safety(gen, SubordinatorParams(1.0), uniform_time_grid(1.0, 1e-3));
    bounds.add(F);
    McConfig cfg;
    const std::vector<std::vector<double>> xs{{-0.995}, {0.005}, {0.505}, {0.905}};
    const std::vector<double> horizons{0.25, 0.5, 1.0};
    const auto mc = mc_grid(sys, safe, xs, horizons, 100000, RiskKind::safety, cfg, RngStream(20240614, 1));
    const double s = sigma * std::sqrt(2.0);
    double mc_worst = 0.0, pde_worst = 0.0;
    bool ok = true;
    for (const auto& r : mc.rows) {
        const double exact = drifted_bm_survival(1.0 - r.x[0], -f, s, r.T);
        const double mc_err = std::abs(r.estimate.p - exact);
        const double pde_err = std::abs(F.interpolate(r.x, r.T) - exact);
        ok = ok && mc_err <= std::max(0.01, 3.0 * r.estimate.half_width()) && pde_err <= 0.01;
        mc_worst = std::max(mc_worst, mc_err);
        pde_worst = std::max(pde_worst, pde_err);
    }
    return {ok, "mc_max_err=" + fmt("%.4f", mc_worst) + " pde_max_err=" + fmt("%.4f", pde_worst)};
}

Outcome dataset_and_ood() {
    const auto cfg = load_config(source_path("configs/dataset-2d.json"));
    const auto spec = dataset_spec(cfg, 1);
    const auto path = (std::filesystem::temp_directory_path() / "fracrisk_acceptance.frsk").string();
    const auto summary = generate_dataset(spec, path);
    const auto ds = read_dataset(path);  // re-validates every stored field
    std::size_t valid = 0;
    for (const auto& r : ds.records) {
        if (!r.ok) continue;
        const auto f = ds.field(r.index);
        bounds.add(f);
        if (field_stats(f).ok()) ++valid;
    }
    std::filesystem::remove(path);

    OodOptions oo;
    oo.cells = cfg.ood_cells.value_or(0);
    oo.points = cfg.ood_points;
    oo.n_paths = cfg.ood_paths;
    oo.tolerance = cfg.ood_tolerance;
    oo.seed = cfg.seed;
    oo.mc_ds = cfg.mc_ds;
    const auto ood = ood_evaluate(spec, oo);
    bounds.add(ood.field);

    std::ostringstream d;
    d << "grid=" << spec.grid.axes()[0].cells << "x" << spec.grid.axes()[1].cells << " times=" << spec.times.size()
      << " fields=" << valid << "/" << spec.n_samples << " ood_checks=" << ood.checks.rows.size()
      << " ood_failures=" << ood.checks.failures << " ood_max_abs_diff=" << fmt("%.4f", ood.checks.max_abs_diff);
    return {summary.failed == 0 && valid == spec.n_samples && ood.checks.rows.size() == oo.points && ood.checks.passed(), d.str()};
}

Outcome maximum_principle() {
    std::ostringstream d;
    d << "fields=" << bounds.fields << " values=" << bounds.values << " violations=" << bounds.violations
      << " min=" << fmt("%.3e", bounds.min_value) << " max=" << fmt("%.12f", bounds.max_value);
    return {bounds.fields > 0 && bounds.violations == 0, d.str()};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "space-fractional case study",
         [] { return case_study("configs/fig1.json", [](RunConfig& c) { c.alpha = 2.0; }); }},
        {2, "time-fractional case study",
         [] { return case_study("configs/fig2.json", [](RunConfig& c) { c.beta = 1.0; }); }},
        {3, "Mittag-Leffler relaxation", mittag_leffler_oracle},
        {4, "reduction exactness", reductions},
        {5, "Fourier symbol", symbols},
        {6, "sampler statistics", sampler_statistics},
        {7, "Brownian first passage", brownian_first_passage},
        {8, "2D dataset and OOD spot checks", dataset_and_ood},
        {9, "maximum principle", maximum_principle},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s): %s seconds=%.1f\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
