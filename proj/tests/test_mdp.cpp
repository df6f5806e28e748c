#include <gtest/gtest.h>

#include "udg/mdp.hpp"
#include "udg/policy.hpp"

using namespace udg;

namespace {

struct ConstantActor {
    Vec a;
    Vec operator()(const Vec&, Rng&) const { return a; }
};

Buffer one_episode(const std::vector<double>& rewards)
{
    Buffer b;
    b.episode_starts.push_back(0);
    for (std::size_t t = 0; t < rewards.size(); ++t)
        b.transitions.push_back({{0, 0}, {0, 0}, rewards[t], {0, 0}, static_cast<int>(t), t + 1 == rewards.size(), 0});
    return b;
}

} // namespace

TEST(EnvStep, ZeroActionIsFixedPoint)
{
    const auto s2 = env_step({0, 0}, {0, 0}, point_mass_env());
    EXPECT_EQ(s2, (Vec{0, 0}));
}

TEST(EnvStep, MovesByDtTimesAction)
{
    const auto s2 = env_step({0, 0}, {1, 0}, point_mass_env());
    EXPECT_DOUBLE_EQ(s2[0], 0.1);
    EXPECT_DOUBLE_EQ(s2[1], 0.0);
}

TEST(EnvStep, ClipsAtStateBound)
{
    const auto s2 = env_step({4.95, 0}, {1, 0}, point_mass_env());
    EXPECT_DOUBLE_EQ(s2[0], 5.0);
    EXPECT_DOUBLE_EQ(s2[1], 0.0);
}

TEST(EnvStep, ClipsActionFirst)
{
    const auto s2 = env_step({0, 0}, {7, -3}, point_mass_env());
    EXPECT_DOUBLE_EQ(s2[0], 0.1);
    EXPECT_DOUBLE_EQ(s2[1], -0.1);
}

TEST(EnvStep, DimensionMismatchThrows)
{
    EXPECT_THROW(env_step({0, 0, 0}, {0, 0}, point_mass_env()), contract_error);
    EXPECT_THROW(env_step({0, 0}, {0}, point_mass_env()), contract_error);
}

TEST(EnvStep, Deterministic)
{
    Rng rng(3);
    const auto spec = point_mass_env();
    for (int k = 0; k < 100; ++k) {
        const Vec s{10 * uniform01(rng) - 5, 10 * uniform01(rng) - 5};
        const Vec a{2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1};
        EXPECT_EQ(env_step(s, a, spec), env_step(s, a, spec));
    }
}

TEST(EnvStep, LipschitzInStateAction)
{
    const auto spec = point_mass_env();
    Rng rng(11);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
    double worst = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const Vec s1{draw(-5.5, 5.5), draw(-5.5, 5.5)}, s2{draw(-5.5, 5.5), draw(-5.5, 5.5)};
        const Vec a1{draw(-1.5, 1.5), draw(-1.5, 1.5)}, a2{draw(-1.5, 1.5), draw(-1.5, 1.5)};
        const Vec c1 = clip_to(s1, spec.state_bounds), c2 = clip_to(s2, spec.state_bounds);
        const double lhs = euclidean(env_step(c1, a1, spec), env_step(c2, a2, spec));
        const double rhs = std::sqrt(squared_distance(c1.data(), c2.data(), 2) + squared_distance(a1.data(), a2.data(), 2));
        EXPECT_LE(lhs, spec.lipschitz_T * rhs + 1e-12);
        if (rhs > 0) worst = std::max(worst, lhs / rhs);
    }
    // The declared constant is also nearly attained (aligned state and action shifts).
    const double tight = euclidean(env_step({0, 0}, {0.1, 0}, spec), env_step({-1, 0}, {0, 0}, spec)) /
                         std::sqrt(1.0 + 0.01);
    EXPECT_NEAR(tight, spec.lipschitz_T, 1e-12);
    EXPECT_LE(worst, spec.lipschitz_T + 1e-12);
}

TEST(EnvSpecValidate, RejectsBadValues)
{
    auto spec = point_mass_env();
    EXPECT_NO_THROW(spec.validate());
    spec.gamma = 1.0;
    EXPECT_THROW(spec.validate(), contract_error);
    spec = point_mass_env();
    spec.state_bounds[0] = {1, 1};
    EXPECT_THROW(spec.validate(), contract_error);
    spec = point_mass_env();
    spec.horizon = 0;
    EXPECT_THROW(spec.validate(), contract_error);
    spec = point_mass_env();
    spec.lipschitz_r = 0;
    EXPECT_THROW(spec.validate(), contract_error);
}

TEST(EnvSpec, Diameters)
{
    const auto spec = point_mass_env();
    EXPECT_NEAR(spec.state_diameter(), std::sqrt(200.0), 1e-12);
    EXPECT_NEAR(spec.action_diameter(), std::sqrt(8.0), 1e-12);
}

TEST(TaskReward, AngleZeroIsUp)
{
    EXPECT_DOUBLE_EQ(task_reward({0, 0}, {0, 1}, 1.0, TaskSpec::angle(0)), 1.0);
}

TEST(TaskReward, AngleOneEightyIsDown)
{
    EXPECT_NEAR(task_reward({0, 0}, {0, 1}, 1.0, TaskSpec::angle(180)), -1.0, 1e-15);
}

TEST(TaskReward, CounterClockwise)
{
    // 90 degrees counterclockwise from +y is -x.
    EXPECT_NEAR(task_reward({0, 0}, {-1, 0}, 1.0, TaskSpec::angle(90)), 1.0, 1e-15);
    EXPECT_NEAR(task_reward({0, 0}, {0.1, 0}, 0.1, TaskSpec::angle(270)), 1.0, 1e-12);
}

TEST(TaskReward, Jump)
{
    EXPECT_DOUBLE_EQ(task_reward({0, 0}, {1, 0.5}, 1.0, TaskSpec::jump(15, 0)), 8.5);
}

TEST(TaskSpec, Validation)
{
    EXPECT_THROW(TaskSpec::angle(360), contract_error);
    EXPECT_THROW(TaskSpec::angle(-1), contract_error);
    EXPECT_THROW(TaskSpec::jump(std::numeric_limits<double>::infinity()), contract_error);
    EXPECT_THROW(TaskSpec::parse("spin:3"), contract_error);
}

TEST(TaskSpec, TextRoundTrip)
{
    for (const auto& t : {TaskSpec::angle(0), TaskSpec::angle(62.5), TaskSpec::jump(15, 0), TaskSpec::jump(-2, 0.25)})
        EXPECT_EQ(TaskSpec::parse(t.to_string()), t);
    EXPECT_EQ(TaskSpec::angle(60).to_string(), "angle:60");
    EXPECT_EQ(TaskSpec::jump(15).to_string(), "jump:15:0");
}

TEST(Rollout, DeterministicZeroPolicy)
{
    auto spec = point_mass_env();
    spec.horizon = 3;
    spec.start_spread = 0.0;
    const auto buf = rollout(ConstantActor{{0, 0}}, spec, nullptr, 1, 5);
    ASSERT_EQ(buf.size(), 3u);
    for (const auto& tr : buf.transitions) {
        EXPECT_EQ(tr.s, spec.start_state);
        EXPECT_EQ(tr.s2, spec.start_state);
        EXPECT_EQ(tr.r, 0.0);
    }
    EXPECT_TRUE(buf.transitions.back().done);
    EXPECT_FALSE(buf.transitions.front().done);
}

TEST(Rollout, EpisodeBookkeeping)
{
    auto spec = point_mass_env();
    spec.horizon = 5;
    auto p = make_rbf_policy(spec, 3, 2.5);
    randomize_weights(p, 0.5, 1);
    const auto buf = rollout(p, spec, nullptr, 2, 9);
    EXPECT_EQ(buf.episode_starts, (std::vector<std::size_t>{0, 5}));
    EXPECT_NO_THROW(buf.validate(spec.horizon));
    for (std::size_t k = 0; k < buf.size(); ++k) EXPECT_EQ(buf.transitions[k].t, static_cast<int>(k % 5));
}

TEST(Rollout, SameSeedSameBuffer)
{
    const auto spec = point_mass_env();
    auto p = make_rbf_policy(spec, 3, 2.5);
    randomize_weights(p, 0.5, 2);
    EXPECT_EQ(rollout(p, spec, nullptr, 3, 42), rollout(p, spec, nullptr, 3, 42));
    EXPECT_NE(rollout(p, spec, nullptr, 3, 42), rollout(p, spec, nullptr, 3, 43));
}

TEST(Rollout, ChainsStatesAndStaysInBounds)
{
    const auto spec = point_mass_env();
    const auto buf = rollout(ConstantActor{{1, 1}}, spec, nullptr, 2, 1);
    for (std::size_t e = 0; e < buf.episode_count(); ++e) {
        auto [lo, hi] = buf.episode_range(e);
        for (std::size_t k = lo + 1; k < hi; ++k) EXPECT_EQ(buf.transitions[k].s, buf.transitions[k - 1].s2);
    }
    for (const auto& tr : buf.transitions)
        for (int d = 0; d < 2; ++d) {
            EXPECT_LE(tr.s2[d], 5.0);
            EXPECT_GE(tr.s2[d], -5.0);
        }
}

TEST(Rollout, ResetJitterWithinSpread)
{
    const auto spec = point_mass_env();
    const auto buf = rollout(ConstantActor{{0, 0}}, spec, nullptr, 50, 3);
    for (std::size_t s : buf.episode_starts)
        for (int d = 0; d < 2; ++d) EXPECT_LE(std::abs(buf.transitions[s].s[d]), spec.start_spread);
}

TEST(Rollout, RewardHookFillsRewards)
{
    const auto spec = point_mass_env();
    const auto buf = rollout(ConstantActor{{0, 1}}, spec, task_hook(TaskSpec::angle(0), spec.dt), 1, 0);
    EXPECT_NEAR(buf.transitions.front().r, 1.0, 1e-12);
}

TEST(Relabel, EmptyBuffer)
{
    EXPECT_TRUE(relabel_buffer(Buffer{}, TaskSpec::angle(0), 0.1).empty());
}

TEST(Relabel, SingleTransition)
{
    Buffer b = one_episode({0.0});
    b.transitions[0].s2 = {0, 1};
    const auto out = relabel_buffer(b, TaskSpec::angle(0), 1.0);
    EXPECT_DOUBLE_EQ(out.transitions[0].r, 1.0);
}

TEST(Relabel, PreservesOtherFieldsAndIsIdempotent)
{
    const auto spec = point_mass_env();
    auto p = make_rbf_policy(spec, 3, 2.5);
    randomize_weights(p, 1.0, 4);
    const auto buf = rollout(p, spec, nullptr, 2, 8);
    const auto once = relabel_buffer(buf, TaskSpec::angle(120), spec.dt);
    const auto twice = relabel_buffer(once, TaskSpec::angle(120), spec.dt);
    EXPECT_EQ(once, twice);
    ASSERT_EQ(once.size(), buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) {
        const auto& a = buf.transitions[k];
        const auto& b = once.transitions[k];
        EXPECT_EQ(a.s, b.s);
        EXPECT_EQ(a.a, b.a);
        EXPECT_EQ(a.s2, b.s2);
        EXPECT_EQ(a.t, b.t);
        EXPECT_EQ(a.done, b.done);
        EXPECT_EQ(a.policy_id, b.policy_id);
    }
    EXPECT_EQ(once.episode_starts, buf.episode_starts);
}

TEST(AverageReturn, GeometricSum)
{
    EXPECT_DOUBLE_EQ(average_return(one_episode({1, 1, 1}), 0.5), 1.75);
}

TEST(AverageReturn, MeanOverEpisodes)
{
    Buffer b = one_episode({2});
    b.episode_starts.push_back(1);
    b.transitions.push_back({{0, 0}, {0, 0}, 4, {0, 0}, 0, true, 0});
    EXPECT_DOUBLE_EQ(average_return(b, 0.9), 3.0);
}

TEST(AverageReturn, GammaZeroKeepsFirstReward)
{
    EXPECT_DOUBLE_EQ(average_return(one_episode({5, 9}), 0.0), 5.0);
}

TEST(AverageReturn, ZeroRewards)
{
    EXPECT_EQ(average_return(one_episode({0, 0, 0, 0}), 0.99), 0.0);
}

TEST(AverageReturn, EmptyThrows)
{
    EXPECT_THROW(average_return(Buffer{}, 0.9), contract_error);
}

TEST(BufferValidate, DetectsBadEpisodes)
{
    Buffer b = one_episode({1, 2, 3});
    EXPECT_NO_THROW(b.validate(3));
    EXPECT_THROW(b.validate(2), contract_error);
    b.episode_starts = {1};
    EXPECT_THROW(b.validate(3), contract_error);
    b.episode_starts = {0, 2, 2};
    EXPECT_THROW(b.validate(3), contract_error);
}
