// Acceptance checks. One PASS/FAIL line per criterion; exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "udg/udg.hpp"

using namespace udg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail)
{
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double x, int digits = 4)
{
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

EmpiricalMeasure random_cloud(std::size_t n, std::size_t d, bool weighted, Rng& rng)
{
    EmpiricalMeasure mu{d, {}, {}, Space::projected};
    for (std::size_t i = 0; i < n * d; ++i) mu.points.push_back(4.0 * uniform01(rng) - 2.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu.weights.push_back(weighted ? 0.05 + uniform01(rng) : 1.0);
        total += mu.weights.back();
    }
    for (auto& w : mu.weights) w /= total;
    return mu;
}

// Minimum over all permutations of the mean matched distance.
double permutation_oracle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu)
{
    const std::size_t n = mu.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            cost += std::sqrt(squared_distance(&mu.points[i * mu.dim], &nu.points[perm[i] * nu.dim], mu.dim));
        best = std::min(best, cost / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

void criterion_1()
{
    const auto t0 = Clock::now();
    Rng rng(derive_seed(2024, 1));
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 6, d = 1 + (trial / 6) % 3;
        const auto mu = random_cloud(n, d, false, rng), nu = random_cloud(n, d, false, rng);
        worst = std::max(worst, std::abs(w1_exact(mu, nu).distance - permutation_oracle(mu, nu)));
    }
    const double secs = seconds_since(t0);
    report(1, worst <= 1e-9 && secs < 10.0,
           "max |W1 - permutation minimum| = " + fmt(worst) + " over 200 clouds in " + fmt(secs) + " s");
}

void criterion_2()
{
    Rng rng(derive_seed(2024, 2));
    double sym = 0.0, ident = 0.0, tri = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + trial % 3;
        const auto a = random_cloud(2 + trial % 7, d, true, rng);
        const auto b = random_cloud(3 + trial % 5, d, true, rng);
        const auto c = random_cloud(1 + trial % 8, d, true, rng);
        const double ab = w1_exact(a, b).distance, ba = w1_exact(b, a).distance;
        const double bc = w1_exact(b, c).distance, ac = w1_exact(a, c).distance;
        sym = std::max(sym, std::abs(ab - ba));
        ident = std::max({ident, w1_exact(a, a).distance, w1_exact(b, b).distance});
        tri = std::max(tri, ac - (ab + bc));
    }
    report(2, sym <= 1e-9 && ident <= 1e-9 && tri <= 1e-9,
           "symmetry " + fmt(sym) + ", identity " + fmt(ident) + ", triangle excess " + fmt(tri) +
               " over 200 triples");
}

void criterion_3()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + (k * 37) % 99, a = 1 + k % 5;
        const double gamma = 0.5 + 0.49 * (k % 10) / 9.0;
        const auto base = derive_seed(2024, 3, static_cast<std::uint64_t>(k));
        const auto m = random_finite_mdp(n, a, gamma, derive_seed(base, 0));
        const auto r = verify_telescoping(m, perturbed_dynamics(m, derive_seed(base, 1)),
                                          random_tabular_policy(n, a, derive_seed(base, 2)));
        worst = std::max(worst, r.residual);
    }
    const double secs = seconds_since(t0);
    report(3, worst < 1e-8 && secs < 30.0,
           "max telescoping residual " + fmt(worst) + " over 50 MDP pairs in " + fmt(secs) + " s");
}

void criterion_11()
{
    const auto spec = point_mass_env();
    double worst = 0.0;
    bool stable = true;
    for (const auto& task : angle_sweep()) {
        const auto plan = grid_value_iteration(spec, task);
        worst = std::max(worst, bellman_residual(plan));
        stable = stable && greedy_is_stable(plan);
    }
    report(11, worst < 1e-6 && stable,
           "max Bellman residual " + fmt(worst) + ", greedy " + (stable ? "stable" : "unstable") +
               " on 6 angle tasks");
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Lists regular files under `dir` relative to it, sorted.
std::vector<std::string> file_list(const fs::path& dir)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
    std::sort(out.begin(), out.end());
    return out;
}

double angle_from_zero(const TaskSpec& t)
{
    const double a = std::fmod(std::abs(t.angle_deg), 360.0);
    return std::min(a, 360.0 - a);
}

void experiment_criteria()
{
    ExperimentConfig cfg;
    apply_settings(cfg, {});

    auto t0 = Clock::now();
    double training_secs = 0.0;
    const auto res = run_experiment(cfg, [&](const std::string& msg) {
        std::cerr << "  [" << fmt(seconds_since(t0)) << " s] " << msg << '\n';
        if (msg.rfind("round ", 0) == 0) training_secs = seconds_since(t0);
    });
    const double total_secs = seconds_since(t0);

    // 4
    {
        const double init = res.min_pairwise.front(), last = res.min_pairwise.back();
        std::string curve;
        for (double v : res.min_pairwise) curve += (curve.empty() ? "" : " -> ") + fmt(v);
        report(4, last >= 3.0 * init && training_secs < 600.0,
               "min pairwise W1 " + curve + " (" + fmt(last / init) + "x) in " + fmt(training_secs) + " s");
    }
    // 5
    {
        int at_least = 0;
        bool far_strict = true;
        std::string detail;
        for (const auto& t : res.tasks) {
            const double udg = t.udg.offline.mean, base = t.baseline_offline;
            if (udg >= base) ++at_least;
            if (angle_from_zero(t.task) >= 120.0 && !(udg > base)) far_strict = false;
            detail += " " + t.task.to_string() + " " + fmt(udg) + "/" + fmt(base);
        }
        report(5, at_least >= 4 && far_strict && total_secs < 1200.0,
               std::to_string(at_least) + "/6 tasks udg >= baseline, far tasks strictly higher: " +
                   (far_strict ? "yes" : "no") + ";" + detail + "; " + fmt(total_secs) + " s");
    }
    // 6
    {
        const double rho = res.gap.spearman_d2_return;
        report(6, res.gap.rows.size() >= 8 && rho <= -0.5,
               "Spearman(W1 to optimal, offline return) = " + fmt(rho) + " over " +
                   std::to_string(res.gap.rows.size()) + " buffers on " + res.gap.task.to_string());
    }
    // 7
    {
        const auto it = std::find_if(res.gap.rows.begin(), res.gap.rows.end(),
                                     [](const GapRow& r) { return r.buffer_id == "oracle"; });
        const bool ok = it != res.gap.rows.end() && it->offline_return >= 0.9 * it->optimal_return;
        report(7, ok,
               it == res.gap.rows.end()
                   ? "oracle buffer missing"
                   : "offline " + fmt(it->offline_return) + " vs oracle " + fmt(it->optimal_return) + " (" +
                         fmt(100.0 * it->offline_return / it->optimal_return) + "%)");
    }
    // 8
    {
        int checked = 0, bad = 0;
        double worst_margin = std::numeric_limits<double>::infinity();
        std::string worst_case;
        for (const auto& t : res.tasks)
            for (const auto& b : t.per_buffer) {
                ++checked;
                const double margin = b.offline_return - (b.behavior_return - 0.05 * std::abs(b.behavior_return));
                if (margin < 0.0) ++bad;
                if (margin < worst_margin) {
                    worst_margin = margin;
                    worst_case = b.buffer_id + "@" + t.task.to_string() + " " + fmt(b.offline_return) + " vs " +
                                 fmt(b.behavior_return);
                }
            }
        report(8, bad == 0,
               std::to_string(checked - bad) + "/" + std::to_string(checked) +
                   " (buffer, task) pairs within 5% of behavior; tightest " + worst_case);
    }
    // 9
    {
        int wins = 0;
        std::string detail;
        for (const auto& t : res.tasks) {
            if (t.top2_mixed >= t.all_mixed) ++wins;
            detail += " " + t.task.to_string() + " " + fmt(t.top2_mixed) + "/" + fmt(t.all_mixed);
        }
        report(9, wins >= 4, std::to_string(wins) + "/6 tasks top-2 >= all;" + detail);
    }
    // 10: the same run-all twice with the same seed.
    {
        const fs::path root = fs::temp_directory_path() / "udg_acceptance";
        fs::remove_all(root);
        save_experiment(res, root / "a");
        t0 = Clock::now();
        save_experiment(run_experiment(cfg), root / "b");
        const auto files_a = file_list(root / "a"), files_b = file_list(root / "b");
        bool same = files_a == files_b;
        std::size_t differing = 0;
        if (same)
            for (const auto& f : files_a)
                if (slurp(root / "a" / f) != slurp(root / "b" / f)) ++differing;
        same = same && differing == 0;
        report(10, same,
               std::to_string(files_a.size()) + " files compared, " + std::to_string(differing) + " differ");
        fs::remove_all(root);
    }
}

} // namespace

int main()
{
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_11();
        experiment_criteria();
    }
    catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
