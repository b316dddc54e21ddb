#include "ptfa/scheduler.hpp"

#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ptfa/error.hpp"

namespace ptfa {
namespace {

constexpr Millis kT0 = 5'000'000;

std::shared_ptr<const FacilitationSettings> settings() {
    static const auto s = std::make_shared<const FacilitationSettings>();
    return s;
}

SessionInfo info(FacilitationModel model) { return SessionInfo{"drv", 0, model, 3, 1'200'000}; }

std::vector<TickReport> run_full(SessionDriver& d, const std::shared_ptr<llm::Provider>& provider) {
    std::vector<TickReport> out;
    d.start(kT0);
    while (!d.session().closed()) {
        out.push_back(d.run_tick(d.next_tick_at(), provider, 5'000));
    }
    return out;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ptfa::Error thrown";
    return ErrorCode::Conflict;
}

TEST(SchedulerConfigTest, Defaults) {
    SchedulerConfig c;
    EXPECT_EQ(c.tick_interval_ms, 30'000);
    EXPECT_EQ(c.session_duration_ms, 1'200'000);
    EXPECT_EQ(c.phase_boundary_ms, 600'000);
    EXPECT_EQ(c.inactivity_threshold_ms, 90'000);
    EXPECT_EQ(c.min_intervention_gap_ms, 60'000);
    EXPECT_EQ(c.tick_count(), 40);
    EXPECT_EQ(c.evaluation_deadline_ms(), 28'000);
    EXPECT_NO_THROW(c.validate());
}

TEST(SchedulerConfigTest, DeadlineNeverBelowHalfATick) {
    SchedulerConfig c;
    c.tick_interval_ms = 3'000;
    EXPECT_EQ(c.evaluation_deadline_ms(), 1'500);
}

TEST(SchedulerConfigTest, ValidationNamesField) {
    auto expect_bad = [](SchedulerConfig c, const std::string& key) {
        try {
            c.validate();
            ADD_FAILURE() << key;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::BadConfig);
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    };
    SchedulerConfig c;
    c.phase_boundary_ms = c.session_duration_ms;
    expect_bad(c, "phase_boundary_ms");
    c = {};
    c.tick_interval_ms = 0;
    expect_bad(c, "tick_interval_ms");
    c = {};
    c.clock_scale = 0;
    expect_bad(c, "clock_scale");
}

TEST(PhaseOfTest, Examples) {
    SchedulerConfig c;
    EXPECT_EQ(phase_of(0, c), Phase::Divergent);
    EXPECT_EQ(phase_of(599'999, c), Phase::Divergent);
    EXPECT_EQ(phase_of(600'000, c), Phase::Convergent);
    EXPECT_EQ(phase_of(1'199'999, c), Phase::Convergent);
    EXPECT_EQ(phase_of(1'200'000, c), Phase::Closed);
    for (Millis t = 0; t < 1'500'000; t += 7'919) {
        EXPECT_EQ(phase_of(t, c), test::oracle_phase(t, 600'000, 1'200'000));
    }
}

TEST(InactivityTest, Examples) {
    SchedulerConfig c;
    EXPECT_TRUE(detect_inactivity(10'000, 100'000, c));
    EXPECT_FALSE(detect_inactivity(10'001, 100'000, c));
}

TEST(RateGateTest, Examples) {
    SchedulerConfig c;
    EXPECT_FALSE(rate_gate(90'000, 120'000, c, false));
    EXPECT_TRUE(rate_gate(60'000, 120'000, c, false));
    EXPECT_TRUE(rate_gate(90'000, 120'000, c, true));
    EXPECT_TRUE(rate_gate(std::nullopt, 0, c, false));
}

TEST(DriverTest, FullRunYieldsFortyTicksThenEnd) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    const auto ticks = run_full(d, llm::scripted_provider({"Good"}));
    ASSERT_EQ(ticks.size(), 41u);
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(ticks[i].tick_index, static_cast<std::int64_t>(i));
        EXPECT_EQ(ticks[i].elapsed_ms, static_cast<Millis>(i) * 30'000);
        EXPECT_FALSE(ticks[i].has(TickAction::SessionEnded));
    }
    EXPECT_TRUE(ticks.back().has(TickAction::SessionEnded));
    EXPECT_EQ(ticks.back().elapsed_ms, 1'200'000);
    EXPECT_TRUE(d.session().closed());
    const auto& log = d.session().log();
    EXPECT_EQ(log.back().kind, PostKind::SessionEnd);
    EXPECT_EQ(log.back().author, Author::system());
}

TEST(DriverTest, BaselineTicksCoverScheduleOffsets) {
    SessionDriver d(info(FacilitationModel::Model0), {}, settings());
    const auto ticks = run_full(d, nullptr);
    std::vector<std::int64_t> baseline_ticks;
    for (const auto& t : ticks) {
        if (t.has(TickAction::BaselinePosted)) baseline_ticks.push_back(t.tick_index);
    }
    EXPECT_EQ(baseline_ticks, (std::vector<std::int64_t>{0, 20, 34}));
    std::vector<Millis> ts;
    for (const auto& p : d.session().log()) {
        if (p.author == Author::facilitator()) ts.push_back(p.ts_ms);
    }
    EXPECT_EQ(ts, (std::vector<Millis>{0, 600'000, 1'020'000}));
}

TEST(DriverTest, PhaseAnnouncedOnceAtBoundary) {
    SessionDriver d(info(FacilitationModel::Model0), {}, settings());
    const auto ticks = run_full(d, nullptr);
    int announced = 0;
    for (const auto& t : ticks) announced += static_cast<int>(std::count(t.actions.begin(), t.actions.end(), TickAction::PhaseAnnounced));
    EXPECT_EQ(announced, 2);  // convergent and closed
    EXPECT_TRUE(ticks[20].has(TickAction::PhaseAnnounced));
    EXPECT_EQ(ticks[20].phase, Phase::Convergent);
    for (const auto& p : d.session().log()) EXPECT_EQ(p.phase, test::oracle_phase(p.ts_ms, 600'000, 1'200'000));
}

TEST(DriverTest, AllGoodProducesNoHatPosts) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    const auto ticks = run_full(d, llm::scripted_provider({"Good", " good. ", "GOOD"}));
    for (const auto& p : d.session().log()) EXPECT_NE(p.author, Author::facilitator());
    // silent room: inactive ticks were evaluated with the re-engagement prompt
    EXPECT_TRUE(ticks[3].inactive);
    EXPECT_TRUE(ticks[3].has(TickAction::InactivityPrompt));
    EXPECT_FALSE(ticks[3].has(TickAction::HatPosted));
}

TEST(DriverTest, GateBlocksSecondPostWithinGap) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    auto provider = llm::scripted_provider({"Suggestion one.", "Suggestion two.", "Suggestion three."});
    d.start(kT0);
    auto t0 = d.run_tick(d.next_tick_at(), provider, 5'000);
    d.participant_post("P1", "hi", kT0 + 1);
    EXPECT_TRUE(t0.has(TickAction::HatPosted));
    EXPECT_EQ(t0.hat, Hat::Green);
    d.participant_post("P2", "ok", kT0 + 20'000);
    auto t1 = d.run_tick(d.next_tick_at(), provider, 5'000);
    EXPECT_FALSE(t1.gate_open);
    EXPECT_FALSE(t1.evaluated);
    EXPECT_FALSE(t1.has(TickAction::HatPosted));
    d.participant_post("P3", "sure", kT0 + 50'000);
    auto t2 = d.run_tick(d.next_tick_at(), provider, 5'000);
    EXPECT_TRUE(t2.gate_open);
    EXPECT_TRUE(t2.has(TickAction::HatPosted));
    EXPECT_EQ(d.recent_hats().size(), 2u);
}

TEST(DriverTest, InactivityWaivesGap) {
    SchedulerConfig cfg;
    cfg.inactivity_threshold_ms = 30'000;
    SessionDriver d(info(FacilitationModel::Model1), cfg, settings());
    auto provider = llm::scripted_provider({"One.", "Two."});
    d.start(kT0);
    auto t0 = d.run_tick(d.next_tick_at(), provider, 5'000);
    EXPECT_TRUE(t0.has(TickAction::HatPosted));
    auto t1 = d.run_tick(d.next_tick_at(), provider, 5'000);
    EXPECT_TRUE(t1.inactive);
    EXPECT_TRUE(t1.gate_open);
    EXPECT_TRUE(t1.has(TickAction::HatPosted));
}

TEST(DriverTest, AntiDominationRotatesHats) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    // every hat always responds
    std::map<std::string, std::vector<std::string>> per;
    for (Hat h : kAllHats) per[std::string(to_string(h))] = std::vector<std::string>(40, std::string(to_string(h)) + " idea.");
    auto provider = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{}, per);
    const auto ticks = run_full(d, provider);
    std::vector<Hat> posted;
    for (const auto& t : ticks) {
        if (t.hat) posted.push_back(*t.hat);
    }
    ASSERT_GE(posted.size(), 3u);
    EXPECT_EQ(posted[0], Hat::Green);
    EXPECT_EQ(posted[1], Hat::Yellow);
    EXPECT_EQ(posted[2], Hat::Red);
    for (std::size_t i = 2; i < posted.size(); ++i) {
        EXPECT_NE(posted[i], posted[i - 1]);
        EXPECT_NE(posted[i], posted[i - 2]);
    }
}

TEST(DriverTest, PostAfterBoundaryAnnouncesPhaseFirst) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    d.start(kT0);
    const auto& p = d.participant_post("P1", "late thought", kT0 + 650'000);
    EXPECT_EQ(p.phase, Phase::Convergent);
    const auto& log = d.session().log();
    ASSERT_EQ(log.size(), 2u);
    EXPECT_EQ(log[0].kind, PostKind::PhaseChange);
    EXPECT_EQ(log[0].ts_ms, 650'000);
}

TEST(DriverTest, ClockRegressionAborts) {
    SessionDriver d(info(FacilitationModel::Model1), {}, settings());
    d.start(kT0);
    d.participant_post("P1", "x", kT0 + 10'000);
    EXPECT_EQ(code_of([&] { d.prepare_tick(kT0 + 5'000); }), ErrorCode::ClockRegression);
}

TEST(DriverTest, TakeNewRecordsDrainsOnce) {
    SessionDriver d(info(FacilitationModel::Model0), {}, settings());
    d.start(kT0);
    d.run_tick(kT0, nullptr, 1'000);
    EXPECT_EQ(d.take_new_records().size(), 1u);
    EXPECT_TRUE(d.take_new_records().empty());
    d.participant_post("P1", "x", kT0 + 1);
    EXPECT_EQ(d.take_new_records().size(), 1u);
}

TEST(DriverTest, RestoreContinuesWhereItStopped) {
    std::vector<Post> journal;
    SessionDriver a(info(FacilitationModel::Model1), {}, settings(), [&](const Post& p) { journal.push_back(p); });
    auto provider = llm::scripted_provider({"A thought.", "Another."});
    a.start(kT0);
    a.run_tick(kT0, provider, 1'000);
    a.participant_post("P1", "x", kT0 + 1);
    a.run_tick(kT0 + 30'000, provider, 1'000);

    SessionDriver b(info(FacilitationModel::Model1), {}, settings());
    b.restore(kT0, journal);
    EXPECT_EQ(b.session().log(), a.session().log());
    EXPECT_EQ(b.last_facilitator_ms(), a.last_facilitator_ms());
    EXPECT_EQ(b.recent_hats(), a.recent_hats());
    EXPECT_EQ(b.last_participant_ms(), 1);
    EXPECT_TRUE(b.take_new_records().empty());
}

TEST(DriverTest, RestoreAddsMissingEndRecord) {
    std::vector<Post> journal;
    SessionDriver a(info(FacilitationModel::Model0), {}, settings(), [&](const Post& p) { journal.push_back(p); });
    run_full(a, nullptr);
    journal.pop_back();  // lost the end record
    SessionDriver b(info(FacilitationModel::Model0), {}, settings());
    b.restore(kT0, journal);
    EXPECT_EQ(b.session().log().back().kind, PostKind::SessionEnd);
    EXPECT_EQ(b.session().log().size(), a.session().log().size());
}

TEST(DriverTest, Model0IgnoresProvider) {
    SessionDriver d(info(FacilitationModel::Model0), {}, settings());
    auto provider = llm::scripted_provider({"Should never appear."});
    run_full(d, provider);
    EXPECT_EQ(provider->calls(), 0u);
}

}  // namespace
}  // namespace ptfa
