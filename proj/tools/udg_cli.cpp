// Command-line front end for the udg library.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "udg/udg.hpp"

namespace fs = std::filesystem;
using namespace udg;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string config;
    std::string out = "udg_out";
};

ExperimentConfig load_config(const Globals& g)
{
    ExperimentConfig cfg;
    if (!g.config.empty()) apply_settings(cfg, load_settings(g.config));
    else apply_settings(cfg, {});
    if (g.seed_given) cfg.udg.seed = g.seed;
    return cfg;
}

std::vector<Buffer> load_buffers(const std::vector<std::string>& paths)
{
    std::vector<Buffer> out;
    for (const auto& p : paths) out.push_back(load_buffer(p));
    return out;
}

std::vector<PolicyParams> load_policies(const std::vector<std::string>& paths)
{
    std::vector<PolicyParams> out;
    for (const auto& p : paths) out.push_back(load_policy(p));
    return out;
}

void emit(const json& j, const Globals& g, const std::string& name)
{
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!g.out.empty()) {
        fs::create_directories(g.out);
        write_text(fs::path(g.out) / name, text);
    }
}

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unsupervised data generation for offline RL on a point-mass environment"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");

    std::vector<std::string> buffer_paths, policy_paths;
    std::string task_text = "angle:0", out_file, kappa_text;
    int episodes = 10, count = 50, states = 20, actions = 3;
    double lemma_gamma = 0.9;

    auto* train = app.add_subcommand("train-diverse", "Train the diverse ensemble");

    auto* generate = app.add_subcommand("generate", "Roll out policies into buffers without task reward");
    generate->add_option("--policy", policy_paths, "Policy files")->required()->check(CLI::ExistingFile);
    generate->add_option("--episodes", episodes, "Episodes per buffer");

    auto* relabel = app.add_subcommand("relabel", "Rewrite every reward with a task reward");
    relabel->add_option("--buffer", buffer_paths, "Buffer file")->required()->check(CLI::ExistingFile);
    relabel->add_option("--task", task_text, "Task, e.g. angle:60 or jump:15:0");

    auto* select = app.add_subcommand("select", "Pick the buffer with the best relabeled return");
    select->add_option("--buffer", buffer_paths, "Buffer files")->required()->check(CLI::ExistingFile);
    select->add_option("--task", task_text, "Task");

    auto* offline = app.add_subcommand("offline-train", "Train a policy offline on one buffer");
    offline->add_option("--buffer", buffer_paths, "Buffer file")->required()->check(CLI::ExistingFile);
    offline->add_option("--task", task_text, "Task");
    offline->add_option("--kappa", kappa_text, "Uncertainty coefficient (default L_r * L_T)");
    offline->add_option("--policy-out", out_file, "Policy file to write (default <out>/offline_policy.txt)");

    auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo return of policies in the true environment");
    evaluate->add_option("--policy", policy_paths, "Policy files")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--task", task_text, "Task");
    evaluate->add_option("--episodes", episodes, "Episodes");

    auto* bound = app.add_subcommand("verify-bound", "Gap between offline and optimal return per buffer");
    bound->add_option("--buffer", buffer_paths, "Buffer files")->required()->check(CLI::ExistingFile);
    bound->add_option("--task", task_text, "Task");

    auto* lemma = app.add_subcommand("verify-lemma", "Telescoping identity on random finite MDP pairs");
    lemma->add_option("--count", count, "Number of MDP pairs");
    lemma->add_option("--states", states, "States per MDP (<= 100)")->check(CLI::Range(1, 100));
    lemma->add_option("--actions", actions, "Actions per MDP")->check(CLI::PositiveNumber);
    lemma->add_option("--gamma", lemma_gamma, "Discount")->check(CLI::Range(0.0, 0.999999));

    auto* regret = app.add_subcommand("regret", "Distance from an ensemble to each task's optimal occupancy");
    regret->add_option("--policy", policy_paths, "Policy files")->required()->check(CLI::ExistingFile);

    auto* run_all = app.add_subcommand("run-all", "Full experiment; writes buffers, policies and report.json");

    auto* plot = app.add_subcommand("plot", "Trajectory and occupancy tables plus SVG panels");
    plot->add_option("--buffer", buffer_paths, "Buffer files")->required()->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("plan-oracle", "Grid value iteration for a task");
    oracle->add_option("--task", task_text, "Task");
    oracle->add_option("--episodes", episodes, "Oracle rollouts to store as a buffer");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_config(g);
        const UdgConfig u = cfg.udg.seeded();
        const EnvSpec& spec = u.spec;
        const TaskSpec task = TaskSpec::parse(task_text);
        const fs::path out(g.out);

        if (*train) {
            std::vector<double> curve;
            const auto ensemble = train_diverse(spec, u.diversity, u.diversity_cem, [&](int round, const auto& ens) {
                curve.push_back(min_offdiagonal(pairwise_w1(heldout_occupancies(ens, cfg))));
                std::cerr << "round " << round << " min pairwise W1 " << curve.back() << '\n';
            });
            fs::create_directories(out / "policies");
            for (std::size_t i = 0; i < ensemble.size(); ++i)
                save_policy((out / "policies" / ("policy_" + std::to_string(i) + ".txt")).string(), ensemble[i]);
            emit({{"min_pairwise_w1_by_round", curve}}, g, "train_diverse.json");
        }
        else if (*generate) {
            const auto policies = load_policies(policy_paths);
            fs::create_directories(out / "buffers");
            const auto buffers = generate_buffers(policies, spec, episodes, derive_seed(u.seed, 4));
            json files = json::array();
            for (std::size_t i = 0; i < buffers.size(); ++i) {
                const auto path = out / "buffers" / ("buffer_" + file_stem(policy_paths[i]) + ".txt");
                save_buffer(path.string(), buffers[i]);
                files.push_back(path.string());
            }
            std::cout << files.dump(2) << '\n';
        }
        else if (*relabel) {
            fs::create_directories(out);
            json files = json::array();
            for (const auto& p : buffer_paths) {
                const auto path = out / (file_stem(p) + "_relabeled.txt");
                save_buffer(path.string(), relabel_buffer(load_buffer(p), task, spec.dt));
                files.push_back(path.string());
            }
            std::cout << files.dump(2) << '\n';
        }
        else if (*select) {
            const auto sel = select_buffer(load_buffers(buffer_paths), task, spec.gamma, spec.dt);
            emit({{"task", task.to_string()}, {"selected", sel.index}, {"buffer", buffer_paths[sel.index]},
                  {"scores", sel.scores}},
                 g, "select.json");
        }
        else if (*offline) {
            require(buffer_paths.size() == 1, "offline-train takes one buffer");
            OfflineConfig oc = u.offline;
            if (!kappa_text.empty()) oc.kappa = parse_double(kappa_text);
            const Buffer buf = relabel_buffer(load_buffer(buffer_paths[0]), task, spec.dt);
            const PolicyParams pi = offline_train(buf, task, spec, oc);
            const std::string path = out_file.empty() ? (out / "offline_policy.txt").string() : out_file;
            if (out_file.empty()) fs::create_directories(out);
            save_policy(path, pi);
            const auto ev = evaluate_policy(pi, spec, task, u.eval_episodes, task_eval_seed(u.seed, task));
            emit({{"task", task.to_string()}, {"policy", path}, {"return", to_json(ev)},
                  {"kappa", oc.resolved_kappa(spec)}},
                 g, "offline_train.json");
        }
        else if (*evaluate) {
            json rows = json::array();
            for (const auto& p : policy_paths) {
                const auto ev = evaluate_policy(load_policy(p), spec, task, episodes, task_eval_seed(u.seed, task));
                rows.push_back({{"policy", p}, {"return", to_json(ev)}});
            }
            emit({{"task", task.to_string()}, {"policies", rows}}, g, "evaluate.json");
        }
        else if (*bound) {
            std::vector<LabeledBuffer> labeled;
            for (const auto& p : buffer_paths) labeled.push_back({file_stem(p), load_buffer(p), std::nullopt});
            OracleOptions oo = cfg.oracle;
            oo.seed = derive_seed(u.seed, 6);
            emit(to_json(verify_gap_bound(labeled, task, spec, oo, u.offline, experiment_occupancy(cfg))), g,
                 "verify_bound.json");
        }
        else if (*lemma) {
            json rows = json::array();
            double worst = 0.0;
            for (int k = 0; k < count; ++k) {
                const auto base = derive_seed(u.seed, 0x1E44, static_cast<std::uint64_t>(k));
                const auto m = random_finite_mdp(states, actions, lemma_gamma, derive_seed(base, 0));
                const auto m_hat = perturbed_dynamics(m, derive_seed(base, 1));
                const auto pi = random_tabular_policy(states, actions, derive_seed(base, 2));
                const auto r = verify_telescoping(m, m_hat, pi);
                worst = std::max(worst, r.residual);
                rows.push_back({{"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}});
            }
            emit({{"pairs", rows}, {"max_residual", worst}}, g, "verify_lemma.json");
        }
        else if (*regret) {
            OracleOptions oo = cfg.oracle;
            oo.seed = derive_seed(u.seed, 6);
            const auto measures = heldout_occupancies(load_policies(policy_paths), cfg);
            emit(to_json(regret_report(measures, u.tasks, spec, oo, experiment_occupancy(cfg))), g, "regret.json");
        }
        else if (*run_all) {
            const auto res = run_experiment(cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });
            save_experiment(res, out);
            std::cout << (out / "report.json").string() << '\n';
        }
        else if (*plot) {
            const auto buffers = load_buffers(buffer_paths);
            fs::create_directories(out);
            std::vector<EmpiricalMeasure> measures;
            for (std::size_t i = 0; i < buffers.size(); ++i) {
                measures.push_back(occupancy_from_buffer(buffers[i], experiment_occupancy(cfg)));
                std::ofstream m(out / ("occupancy_" + file_stem(buffer_paths[i]) + ".txt"));
                write_measure(m, measures.back());
            }
            std::ofstream table(out / "trajectories.txt");
            write_trajectory_table(table, buffers);
            std::ofstream traj(out / "trajectories.svg");
            write_trajectory_svg(traj, buffers, spec, "trajectories");
            std::ofstream occ(out / "occupancy.svg");
            write_occupancy_svg(occ, measures, spec, "discounted occupancy");
            std::cout << out.string() << '\n';
        }
        else if (*oracle) {
            const auto plan = std::make_shared<const GridPlan>(grid_value_iteration(spec, task, cfg.oracle.planner));
            const GreedyActor actor{plan, 0.0};
            fs::create_directories(out);
            const auto buf = rollout(actor, spec, task_hook(task, spec.dt), episodes, derive_seed(u.seed, 7));
            const std::string path = (out / "oracle_buffer.txt").string();
            save_buffer(path, buf);
            emit({{"task", task.to_string()},
                  {"sweeps", plan->sweeps},
                  {"bellman_residual", plan->residual},
                  {"greedy_stable", greedy_is_stable(*plan)},
                  {"value_at_start", plan->value(spec.start_state)},
                  {"return", to_json(evaluate_actor(actor, spec, task, u.eval_episodes, task_eval_seed(u.seed, task)))},
                  {"buffer", path}},
                 g, "plan_oracle.json");
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
