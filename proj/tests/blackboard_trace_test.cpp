#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "agentos/blackboard.hpp"
#include "agentos/trace.hpp"

using namespace agentos;

TEST(Blackboard, DenseSequence) {
  Blackboard bb;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(bb.append(Json{{"i", i}}, "host", EntryKind::Insight, 1).seq, i + 1u);
  EXPECT_EQ(bb.size(), 5u);
  EXPECT_EQ(bb.read()[3].body["i"], 3);
}

TEST(Blackboard, Filters) {
  Blackboard bb;
  bb.append({}, "host", EntryKind::Metadata, 1);
  bb.append({}, "app:sheetapp", EntryKind::Result, 1);
  bb.append({}, "app:sheetapp", EntryKind::Error, 2);
  EXPECT_EQ(bb.read({EntryKind::Result, {}, {}}).size(), 1u);
  EXPECT_EQ(bb.read({{}, "app:sheetapp", {}}).size(), 2u);
  EXPECT_EQ(bb.read({{}, {}, 2}).size(), 1u);
  EXPECT_EQ(bb.read({EntryKind::Error, "host", {}}).size(), 0u);
}

TEST(Blackboard, ClosedRejectsAppends) {
  Blackboard bb;
  bb.append({}, "host", EntryKind::Insight, 1);
  bb.close();
  EXPECT_TRUE(bb.closed());
  try {
    bb.append({}, "host", EntryKind::Insight, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SessionClosed);
  }
  EXPECT_EQ(bb.size(), 1u);
}

TEST(Blackboard, ConcurrentAppendsAreGapFreeAndOrdered) {
  Blackboard bb;
  std::vector<std::uint64_t> heard;
  bb.set_listener([&](const BlackboardEntry& e) { heard.push_back(e.seq); });
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&, w] {
      for (int i = 0; i < 250; ++i) bb.append(Json{{"w", w}, {"i", i}}, "w" + std::to_string(w), EntryKind::Insight, 1);
    });
  }
  for (auto& t : writers) t.join();
  const auto all = bb.read();
  ASSERT_EQ(all.size(), 1000u);
  std::map<int, int> last;
  for (std::size_t i = 0; i < all.size(); ++i) {
    ASSERT_EQ(all[i].seq, i + 1);
    const int w = all[i].body["w"], n = all[i].body["i"];
    if (last.count(w)) ASSERT_EQ(n, last[w] + 1);
    last[w] = n;
  }
  ASSERT_EQ(heard.size(), 1000u);
  for (std::size_t i = 0; i < heard.size(); ++i) ASSERT_EQ(heard[i], i + 1);
}

TEST(Trace, SequenceAndClock) {
  Trace t("s1");
  std::uint64_t tick = 40;
  t.set_clock([&] { return tick++; });
  t.append(events::kSessionStart, 0, {});
  t.append(events::kRoundStart, 1, Json{{"request", "x"}});
  const auto ev = t.events();
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].seq, 1u);
  EXPECT_EQ(ev[1].ts, 41u);
  EXPECT_EQ(ev[1].session, "s1");
  EXPECT_EQ(t.since(1).size(), 1u);
  EXPECT_EQ(t.last_seq(), 2u);
}

TEST(Trace, JsonlRoundTrip) {
  Trace t("s2");
  t.append(events::kAction, 1, Json{{"text", "line\nbreak"}});
  t.append(events::kSim, 1, Json{{"hash", "ab"}});
  const auto back = parse_jsonl(t.to_jsonl());
  EXPECT_EQ(back, t.events());

  const auto path = std::filesystem::temp_directory_path() / "agentos_trace_test.jsonl";
  t.write_jsonl(path);
  EXPECT_EQ(read_jsonl(path), t.events());
  std::filesystem::remove(path);
  EXPECT_THROW(parse_jsonl("{not json}\n"), Error);
}

TEST(Trace, WaitSinceWakesOnAppend) {
  Trace t("s3");
  std::thread writer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    t.append(events::kRoundEnd, 1, {});
  });
  const auto got = t.wait_since(0, std::chrono::milliseconds(2000));
  writer.join();
  EXPECT_EQ(got.size(), 1u);
  EXPECT_TRUE(t.wait_since(1, std::chrono::milliseconds(10)).empty());
}
