#include <gtest/gtest.h>

#include "udg/pipeline.hpp"

using namespace udg;

namespace {

// One-episode buffer whose single transition has the given reward.
Buffer scored_buffer(double reward, int policy_id = 0)
{
    Buffer b;
    b.env_id = "point2d";
    b.episode_starts = {0};
    b.meta.policy_ids = {policy_id};
    // Angle-0 reward equals vertical displacement / dt.
    b.transitions.push_back({{0, 0}, {0, 0}, 0, {0, reward * 0.1}, 0, true, policy_id});
    return b;
}

Buffer policy_buffer(const EnvSpec& spec, int id, std::uint64_t seed, int episodes)
{
    auto p = make_rbf_policy(spec, 3, 2.5, id);
    randomize_weights(p, 1.0, seed);
    return rollout(p, spec, nullptr, episodes, seed);
}

OfflineConfig fast_offline()
{
    OfflineConfig cfg;
    cfg.cem = CemConfig{16, 0.25, 6, 0.5, 1, 0};
    cfg.n_start_states = 32;
    return cfg;
}

} // namespace

TEST(SelectBuffer, Argmax)
{
    const auto sel = select_buffer({scored_buffer(3), scored_buffer(7), scored_buffer(5)}, TaskSpec::angle(0), 0.9, 0.1);
    EXPECT_EQ(sel.index, 1u);
    ASSERT_EQ(sel.scores.size(), 3u);
    EXPECT_NEAR(sel.scores[1], 7.0, 1e-12);
}

TEST(SelectBuffer, TiesPickLowestIndex)
{
    EXPECT_EQ(select_buffer({scored_buffer(4), scored_buffer(4)}, TaskSpec::angle(0), 0.9, 0.1).index, 0u);
}

TEST(SelectBuffer, SingleBuffer)
{
    EXPECT_EQ(select_buffer({scored_buffer(-2)}, TaskSpec::angle(0), 0.9, 0.1).index, 0u);
}

TEST(SelectBuffer, Errors)
{
    EXPECT_THROW(select_buffer({}, TaskSpec::angle(0), 0.9, 0.1), contract_error);
    EXPECT_THROW(select_buffer({Buffer{}}, TaskSpec::angle(0), 0.9, 0.1), contract_error);
}

TEST(SelectBuffer, InvariantUnderPositiveRewardScaling)
{
    // Scaling dt rescales every reward by the same positive factor.
    const auto spec = point_mass_env();
    std::vector<Buffer> bufs;
    for (int i = 0; i < 6; ++i) bufs.push_back(policy_buffer(spec, i, 30 + i, 2));
    for (double angle : {0.0, 100.0, 220.0}) {
        const auto base = select_buffer(bufs, TaskSpec::angle(angle), spec.gamma, spec.dt).index;
        EXPECT_EQ(select_buffer(bufs, TaskSpec::angle(angle), spec.gamma, spec.dt / 7.0).index, base);
        EXPECT_EQ(select_buffer(bufs, TaskSpec::angle(angle), spec.gamma, spec.dt * 3.0).index, base);
    }
}

TEST(MixBuffers, SingleIdIsIdentity)
{
    const auto spec = point_mass_env();
    const std::vector<Buffer> bufs{policy_buffer(spec, 2, 1, 2)};
    EXPECT_EQ(mix_buffers(bufs, {0}), bufs[0]);
}

TEST(MixBuffers, ConcatenatesAndKeepsProvenance)
{
    const auto spec = point_mass_env();
    const std::vector<Buffer> bufs{policy_buffer(spec, 0, 1, 2), policy_buffer(spec, 1, 2, 3)};
    const auto mixed = mix_buffers(bufs, {0, 1});
    EXPECT_EQ(mixed.size(), bufs[0].size() + bufs[1].size());
    EXPECT_EQ(mixed.episode_count(), 5u);
    EXPECT_NO_THROW(mixed.validate(spec.horizon));
    EXPECT_EQ(mixed.meta.policy_ids, (std::vector<int>{0, 1}));
    for (std::size_t k = 0; k < mixed.size(); ++k)
        EXPECT_EQ(mixed.transitions[k].policy_id, k < bufs[0].size() ? 0 : 1);
}

TEST(MixBuffers, EnvMismatchAndEmptyIds)
{
    const auto spec = point_mass_env();
    std::vector<Buffer> bufs{policy_buffer(spec, 0, 1, 1), policy_buffer(spec, 1, 2, 1)};
    bufs[1].env_id = "other";
    EXPECT_THROW(mix_buffers(bufs, {0, 1}), contract_error);
    EXPECT_THROW(mix_buffers(bufs, {}), contract_error);
}

TEST(MixBuffers, OccupancyIsEpisodeWeightedMixture)
{
    const auto spec = point_mass_env();
    const std::vector<Buffer> bufs{policy_buffer(spec, 0, 1, 2), policy_buffer(spec, 1, 2, 5)};
    OccupancyOptions occ;
    occ.max_points = 100000;
    const auto mixed = occupancy_from_buffer(mix_buffers(bufs, {0, 1}), occ);
    const auto a = occupancy_from_buffer(bufs[0], occ), b = occupancy_from_buffer(bufs[1], occ);
    const double wa = 2.0 / 7.0, wb = 5.0 / 7.0;
    ASSERT_EQ(mixed.size(), a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(mixed.weights[i], wa * a.weights[i], 1e-9);
    for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(mixed.weights[a.size() + j], wb * b.weights[j], 1e-9);
}

TEST(TopIndices, OrderAndTies)
{
    EXPECT_EQ(top_indices({1, 5, 5, 3}, 2), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(top_indices({1}, 2), (std::vector<std::size_t>{0}));
}

TEST(Spearman, KnownValues)
{
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
    // Classic textbook example: d^2 sum = 2 over n = 5 -> 1 - 6*2/(5*24) = 0.9.
    EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {2, 1, 3, 4, 5}), 0.9, 1e-12);
    EXPECT_EQ(average_ranks({3, 1, 3, 2}), (std::vector<double>{3.5, 1, 3.5, 2}));
    EXPECT_TRUE(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
}

TEST(RunUdg, EmptyTaskListGivesEmptyReport)
{
    UdgConfig cfg;
    cfg.diversity.n_policies = 2;
    cfg.diversity.rounds = 0;
    cfg.buffer_episodes = 1;
    const auto run = run_udg(cfg);
    EXPECT_TRUE(run.results.empty());
    EXPECT_EQ(run.buffers.size(), 2u);
}

TEST(RunUdg, SmallRunIsReproducibleAndBeatsRandom)
{
    UdgConfig cfg;
    cfg.diversity.n_policies = 4;
    cfg.diversity.rounds = 1;
    cfg.diversity_cem = CemConfig{12, 0.25, 4, 1.0, 2, 0};
    cfg.offline = fast_offline();
    cfg.tasks = {TaskSpec::angle(0), TaskSpec::angle(180)};
    cfg.buffer_episodes = 4;
    cfg.eval_episodes = 5;
    cfg.seed = 21;
    const auto a = run_udg(cfg);
    const auto b = run_udg(cfg);
    ASSERT_EQ(a.results.size(), 2u);
    for (std::size_t t = 0; t < a.results.size(); ++t) {
        EXPECT_EQ(a.results[t].selected, b.results[t].selected);
        EXPECT_EQ(a.results[t].policy, b.results[t].policy);
        EXPECT_EQ(a.results[t].offline.mean, b.results[t].offline.mean);
        const auto random = initial_ensemble(cfg.spec, cfg.seeded().diversity).front();
        EXPECT_GT(a.results[t].offline.mean,
                  evaluate_policy(random, cfg.spec, a.results[t].task, cfg.eval_episodes, 1).mean);
    }
}

TEST(Regret, SingleMemberIsItsDistance)
{
    const auto spec = point_mass_env();
    OracleOptions oo;
    oo.rollouts = 10;
    const auto occ = occupancy_from_buffer(policy_buffer(spec, 0, 3, 5));
    const auto rep = regret_report({occ}, {TaskSpec::angle(0)}, spec, oo);
    const auto oracle = make_oracle(spec, TaskSpec::angle(0), oo, {});
    EXPECT_NEAR(rep.rows[0].regret, w1_exact(occ, oracle.occupancy).distance, 1e-12);
    EXPECT_EQ(rep.rows[0].best_member, 0u);
    EXPECT_TRUE(std::isinf(rep.surrogate));
}

TEST(Regret, OracleMemberHasNearZeroRegret)
{
    const auto spec = point_mass_env();
    OracleOptions oo;
    oo.rollouts = 20;
    oo.seed = 4;
    const auto task = TaskSpec::angle(120);
    const auto plan = std::make_shared<const GridPlan>(grid_value_iteration(spec, task, oo.planner));
    const auto oracle_occ = occupancy_from_buffer(rollout(GreedyActor{plan, 0.0}, spec, nullptr, 20, 99));
    const auto other = occupancy_from_buffer(policy_buffer(spec, 1, 5, 5));
    const auto rep = regret_report({other, oracle_occ}, {task}, spec, oo);
    EXPECT_EQ(rep.rows[0].best_member, 1u);
    EXPECT_LE(rep.rows[0].regret, 2.0 * rep.rows[0].noise_floor + 1e-9);
    EXPECT_GE(rep.rows[0].regret, 0.0);
    EXPECT_EQ(rep.worst_case_regret, rep.rows[0].regret);
}

TEST(GapBound, OracleBufferAndOppositeBuffer)
{
    const auto spec = point_mass_env();
    const auto task = TaskSpec::angle(0);
    OracleOptions oo;
    oo.rollouts = 20;
    oo.eval_episodes = 10;
    oo.seed = 6;
    const auto plan = std::make_shared<const GridPlan>(grid_value_iteration(spec, task, oo.planner));
    const auto opposite_plan =
        std::make_shared<const GridPlan>(grid_value_iteration(spec, TaskSpec::angle(180), oo.planner));
    const std::vector<LabeledBuffer> bufs{
        {"oracle", rollout(GreedyActor{plan, 0.0}, spec, nullptr, 10, 1), std::nullopt},
        {"opposite", rollout(GreedyActor{opposite_plan, 0.1}, spec, nullptr, 10, 2), std::nullopt},
    };
    const auto rep = verify_gap_bound(bufs, task, spec, oo, fast_offline());
    ASSERT_EQ(rep.rows.size(), 2u);
    const auto& near = rep.rows[0];
    const auto& far = rep.rows[1];
    EXPECT_LT(near.w1_to_optimal, 0.2);
    EXPECT_LE(near.gap, 0.1 * near.optimal_return);
    EXPECT_GT(far.gap, near.gap);
    EXPECT_GT(far.w1_to_optimal, near.w1_to_optimal);
    for (const auto& r : rep.rows) {
        EXPECT_NEAR(r.gap, r.optimal_return - r.offline_return, 1e-12);
        EXPECT_TRUE(std::isfinite(r.epsilon_u) && std::isfinite(r.support_diameter) && std::isfinite(r.w1_model));
    }
    EXPECT_NEAR(rep.c, 100.0, 1e-9);
    EXPECT_NEAR(rep.C, 2.0 * 100.0 * 0.99 * spec.lipschitz_r * spec.lipschitz_T, 1e-9);
    EXPECT_NEAR(rep.spearman_d2_return, -1.0, 1e-12);
}
