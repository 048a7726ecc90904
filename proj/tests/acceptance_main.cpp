// Acceptance suite: runs every verdict-grade experiment and checks the
// documented thresholds, one line per criterion.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlat/analytic.hpp"
#include "hyperlat/config.hpp"
#include "hyperlat/estimator.hpp"
#include "hyperlat/recipes.hpp"

using namespace hyperlat;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] C%02d %-24s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string out_dir(const std::string& leaf) {
    const auto dir = std::filesystem::temp_directory_path() / "hyperlat_acceptance" / leaf;
    std::filesystem::create_directories(dir);
    return dir.string();
}

void recipe_criterion(int id, const std::string& name, const std::string& recipe,
                      const std::function<std::string(const RecipeResult&)>& describe) {
    const RecipeResult res = run_recipe(recipe, out_dir(recipe));
    report(id, name, res.pass, describe(res));
}

long double j1_series_oracle(long double x) {
    const long double q = 0.25L * x * x;
    long double term = 0.5L * x, sum = term;
    for (int k = 1; k <= 120; ++k) {
        term *= -q / (static_cast<long double>(k) * (k + 1));
        sum += term;
        if (fabsl(term) < 1e-24L * fabsl(sum)) break;
    }
    return sum;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// --- C3: exact d=1 formula -------------------------------------------------

void criterion_d1_exact() {
    bool pass = true;
    std::ostringstream detail;

    // Exact-measure brute force over U for the interval count.
    const auto brute = [](double r) {
        const double f1 = r - std::floor(r);
        std::vector<double> cuts{0.0, 1.0, f1, 1.0 - f1};
        std::sort(cuts.begin(), cuts.end());
        double mean = 0.0, second = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double len = cuts[i + 1] - cuts[i];
            if (len <= 0) continue;
            const double u = 0.5 * (cuts[i] + cuts[i + 1]);
            const double n = std::floor(r - u) + std::floor(r + u) + 1.0;
            mean += n * len;
            second += n * n * len;
        }
        return second - mean * mean;
    };

    for (double r : {0.6, 17.25}) {
        const double f = 2.0 * r - std::floor(2.0 * r);
        const double expect = f * (1.0 - f);
        if (std::abs(brute(r) - expect) > 1e-12) pass = false;
        if (std::abs(exact_sigma_1d(r) - expect) > 1e-12) pass = false;

        ExperimentConfig cfg;
        cfg.lattice = make_lattice("Z1");
        cfg.field = FieldSpec::make_iid(IidDistribution::point_mass(1));
        cfg.radii = {r};
        cfg.replicas = 20000;
        cfg.seed = 31400 + static_cast<std::uint64_t>(100 * r);
        const VarianceCurve c = estimate_variance(cfg);
        const double tol = 3.0 * c.points[0].std_error * ball_volume(1, r);
        if (std::abs(c.points[0].variance - expect) > std::max(tol, 1e-12)) pass = false;
        detail << "r=" << r << " var=" << c.points[0].variance << " exact=" << expect << "  ";
    }
    report(3, "d1-exact-formula", pass, detail.str());
}

// --- C9: geometry claims ---------------------------------------------------

void criterion_geometry() {
    int violations_push = 0, violations_expel = 0;
    for (int dim : {2, 3}) {
        Rng rng(777 + dim, 0, 0);
        for (int it = 0; it < 100000; ++it) {
            const double r = rng.uniform(1.0, 50.0);
            const double eps = rng.uniform(1e-6, r / 10.0);
            const Vec v = scale(rng.unit_vector(dim), rng.uniform(0.9 * r, 1.1 * r), dim);
            const Vec w = scale(rng.unit_vector(dim), rng.uniform(0.0, r / 10.0), dim);
            const Vec d = add(v, w, dim);
            const Vec pushed = add(v, scale(d, eps / norm(d, dim), dim), dim);
            if (norm(pushed, dim) < norm(v, dim) + eps / 3.0 - 1e-12) ++violations_push;
        }
        Rng rng2(888 + dim, 0, 0);
        for (int it = 0; it < 100000; ++it) {
            const double r = rng2.uniform(2.0, 40.0);
            const double eps = rng2.uniform(1e-6, 0.999 * r / 10.0);
            const Vec tau = scale(rng2.unit_vector(dim), rng2.uniform(0.0, r / 10.0), dim);
            const Vec c0 =
                sub(tau, scale(rng2.unit_vector(dim), rng2.uniform(0.0, r / 10.0), dim), dim);
            const Vec y =
                scale(rng2.unit_vector(dim), rng2.uniform(r - eps / 4.0, 3.0 * r), dim);
            double pushed_norm;
            if (norm(y, dim) <= 1.1 * r) {
                const Vec d = sub(add(y, tau, dim), c0, dim);
                pushed_norm = norm(add(y, scale(d, eps / norm(d, dim), dim), dim), dim);
            } else {
                pushed_norm = norm(y, dim) - eps;
            }
            if (pushed_norm <= r) ++violations_expel;
        }
    }
    std::ostringstream detail;
    detail << "outward-push violations=" << violations_push
           << " expulsion violations=" << violations_expel << " (2x100000 samples, d=2,3)";
    report(9, "geometry-claims", violations_push == 0 && violations_expel == 0, detail.str());
}

// --- C10: kernel / Bessel suite ---------------------------------------------

void criterion_kernels() {
    bool pass = true;
    std::ostringstream detail;

    double worst_j1 = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = 16.0 * (i + 0.5) / 1000.0;
        worst_j1 = std::max(worst_j1,
                            std::abs(bessel_j1(x) - static_cast<double>(j1_series_oracle(x))));
    }
    if (worst_j1 > 1e-9) pass = false;
    detail << "j1_err=" << worst_j1;

    double worst_hat = 0.0;
    const KernelEval k2{2, 1.0};
    for (int i = 0; i <= 100; ++i) {
        const double s = i / 100.0;
        const double quad =
            4.0 / M_PI *
            simpson([](double th) { return std::cos(th) * std::cos(th); }, std::asin(s),
                    0.5 * M_PI, 2000);
        worst_hat = std::max(worst_hat, std::abs(jr_hat(k2, 2.0 * s) - quad));
    }
    if (worst_hat > 1e-8) pass = false;
    detail << " hat_err=" << worst_hat;

    const Lattice z2 = make_lattice("Z2");
    double worst_pair = 0.0;
    for (double r : {10.0, 20.0, 40.0}) {
        const double direct = lattice_sigma_direct(z2, r);
        const ATermResult dual = lattice_A_term(z2, r, 0.0, 1e-6);
        worst_pair = std::max(worst_pair, std::abs(direct - dual.value));
    }
    if (worst_pair > 1e-6) pass = false;
    detail << " pairing_err=" << worst_pair;

    // Large-x residual of the two-term J1^2 asymptotics stays O(x^-3).
    const double a = 2.0 / M_PI, b = -3.0 / (4.0 * M_PI);
    double worst_c = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double x = 5.0 + 0.05 * i;
        const double res = bessel_j1(x) * bessel_j1(x) -
                           a * std::pow(std::sin(x - 0.25 * M_PI), 2) / x -
                           b * std::cos(2.0 * x) / (x * x);
        worst_c = std::max(worst_c, std::abs(res) * x * x * x);
    }
    if (worst_c > 2.0) pass = false;
    detail << " asym_C=" << worst_c;

    report(10, "kernel-bessel-suite", pass, detail.str());
}

// --- C11: counting suite -----------------------------------------------------

void criterion_counting() {
    bool pass = true;
    std::ostringstream detail;

    for (const char* name : {"Z1", "Z2", "Z3", "triangular"}) {
        const Lattice lat = make_lattice(name);
        for (double R : {1.0, 4.0, 10.0}) {
            // Independent nested-loop enumeration over a generous box.
            std::int64_t expected = 0;
            const std::int64_t box = 36;
            IVec n{};
            std::function<void(int)> rec = [&](int i) {
                if (i == lat.dim) {
                    if (norm2(lat.basis.apply_int(n), lat.dim) <= R * R) ++expected;
                    return;
                }
                for (std::int64_t v = -box; v <= box; ++v) {
                    n[i] = v;
                    rec(i + 1);
                }
            };
            rec(0);
            if (count_points_in_ball(lat, zero_vec(), R) != expected) pass = false;
        }
    }
    detail << "brute=ok";

    const Lattice z2 = make_lattice("Z2");
    double worst_gauss = 0.0;
    for (double R : {100.0, 500.0, 1000.0, 2000.0}) {
        const CountReport rep = gauss_residual(z2, zero_vec(), R);
        worst_gauss = std::max(worst_gauss, std::abs(rep.residual) / R);
    }
    if (worst_gauss > 2.0) pass = false;
    detail << " gauss_resid/R=" << worst_gauss;

    double worst_ann = 0.0;
    for (double R : {100.0, 200.0, 400.0, 700.0, 1000.0}) {
        const double tau = std::pow(R, -0.1);
        worst_ann = std::max(
            worst_ann, static_cast<double>(count_annulus(z2, R, tau)) / (tau * R));
    }
    if (worst_ann > 16.0) pass = false;
    detail << " annulus/(tauR)=" << worst_ann;

    report(11, "counting-suite", pass, detail.str());
}

// --- C12: determinism across worker counts -----------------------------------

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string recipe : {std::string("poisson-baseline"), std::string("lattice-classI")}) {
        std::vector<std::string> bodies;
        for (int threads : {1, 4, 16}) {
            const std::string dir = out_dir("det_" + recipe + "_" + std::to_string(threads));
            const std::string cmd = "HYPERLAT_THREADS=" + std::to_string(threads) + " " +
                                    HYPERLAT_BIN + " recipe " + recipe + " --scale quick --out " +
                                    dir + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) == -1) pass = false;
            bodies.push_back(slurp(dir + "/curve.csv"));
        }
        const bool same = !bodies[0].empty() && bodies[0] == bodies[1] && bodies[1] == bodies[2];
        if (!same) pass = false;
        detail << recipe << (same ? "=identical " : "=DIFFERS ");
    }
    report(12, "determinism", pass, detail.str());
}

}  // namespace

int main() {
    std::printf("hyperlat acceptance suite\n");

    recipe_criterion(1, "poisson-calibration", "poisson-baseline", [](const RecipeResult& r) {
        std::ostringstream d;
        for (const auto& p : r.summary["points"])
            d << "sigma(" << p["r"].get<double>() << ")=" << p["sigma"].get<double>() << " ";
        return d.str();
    });

    recipe_criterion(2, "lattice-classI", "lattice-classI", [](const RecipeResult& r) {
        std::ostringstream d;
        d << "slope=" << r.summary["slope"].get<double>() << " (need <= -0.8), A-match 3se";
        return d.str();
    });

    criterion_d1_exact();

    recipe_criterion(4, "iid-gaussian-HU-d2", "iid-HU-d2", [](const RecipeResult& r) {
        std::ostringstream d;
        d << "decreasing=" << r.summary["decreasing"].get<bool>()
          << " halved=" << r.summary["halved"].get<bool>()
          << " oracle=" << r.summary["oracle_agreement"].get<bool>();
        return d.str();
    });

    recipe_criterion(5, "heavytail-divergence", "heavytail-divergence",
                     [](const RecipeResult& r) {
                         std::ostringstream d;
                         for (const auto& c : r.summary["cases"])
                             d << c["case"].get<std::string>() << "="
                               << c["trend_slope"].get<double>() << " ";
                         return d.str();
                     });

    recipe_criterion(6, "radialpush-d3", "radialpush-d3", [](const RecipeResult& r) {
        std::ostringstream d;
        d << "ratio=" << r.summary["ratio"].get<double>() << " (need > 1.5), increasing="
          << r.summary["increasing"].get<bool>();
        return d.str();
    });

    recipe_criterion(7, "radialpush-d2-classI", "radialpush-d2-classI",
                     [](const RecipeResult& r) {
                         std::ostringstream d;
                         d << "slope=" << r.summary["slope"].get<double>() << " (need >= -0.6)";
                         return d.str();
                     });

    recipe_criterion(8, "slowdecay", "slowdecay", [](const RecipeResult& r) {
        std::ostringstream d;
        d << "c=" << r.summary["fitted_c"].get<double>() << " M="
          << r.summary["fitted_m"].get<int>() << " trend="
          << r.summary["hyperuniform_trend"].get<bool>();
        return d.str();
    });

    criterion_geometry();
    criterion_kernels();
    criterion_counting();
    criterion_determinism();

    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "OK" : "FAILED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
