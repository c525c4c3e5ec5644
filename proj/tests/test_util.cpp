#include <gtest/gtest.h>

#include <set>

#include "oatlas/date.hpp"
#include "oatlas/util.hpp"

using namespace oatlas;

TEST(Date, ParseAndFormat) {
  const auto d = Date::parse("2022-02-24");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->str(), "2022-02-24");
  EXPECT_EQ(d->next().str(), "2022-02-25");
  EXPECT_EQ(Date::parse("2022-02-28")->next().str(), "2022-03-01");
  EXPECT_EQ(Date::parse("2024-02-28")->next().str(), "2024-02-29");
  EXPECT_EQ(d->prev().str(), "2022-02-23");
  EXPECT_EQ(d->plus(7).str(), "2022-03-03");
  EXPECT_LT(*Date::parse("2021-12-31"), *d);
}

TEST(Date, RejectsMalformed) {
  for (const char* s : {"", "2022-2-24", "2022-02-30", "2022-13-01", "20220224", "2022-02-24x", "abcd-ef-gh"}) {
    EXPECT_FALSE(Date::parse(s)) << s;
  }
}

TEST(Timestamp, Variants) {
  struct Case {
    const char* in;
    const char* utc;
  };
  const Case cases[] = {
      {"2022-02-24", "2022-02-24T00:00:00Z"},
      {"2022-02-24T05:06:07Z", "2022-02-24T05:06:07Z"},
      {"2022-02-24 05:06:07", "2022-02-24T05:06:07Z"},
      {"2022-02-24T05:06", "2022-02-24T05:06:00Z"},
      {"2022-02-24T05:06:07.123Z", "2022-02-24T05:06:07Z"},
      {"2022-02-24T01:00:00+02:00", "2022-02-23T23:00:00Z"},
      {"2022-02-24T23:30:00-0130", "2022-02-25T01:00:00Z"},
      {"2022-02-24T23:30:00-01", "2022-02-25T00:30:00Z"},
  };
  for (const auto& c : cases) {
    const auto ts = parse_timestamp(c.in);
    ASSERT_TRUE(ts) << c.in;
    EXPECT_EQ(format_timestamp(*ts), c.utc) << c.in;
  }
  EXPECT_EQ(date_of(*parse_timestamp("2022-02-24T01:00:00+02:00")).str(), "2022-02-23");
  for (const char* bad : {"", "yesterday", "2022-02-24T", "2022-02-24T25:00:00Z", "2022-02-24T05:06:07+", "2022-02-24Q"}) {
    EXPECT_FALSE(parse_timestamp(bad)) << bad;
  }
}

TEST(Strings, SplitTrimLower) {
  EXPECT_EQ(trim("  a b \t\n"), "a b");
  EXPECT_EQ(to_lower_ascii("AbC ÄÖ"), "abc ÄÖ");
  EXPECT_EQ(split_whitespace("  a  b\tc\n"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(split("a\t\tb", '\t'), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(utf8_length("київ"), 4u);
  EXPECT_EQ(utf8_length("ab"), 2u);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(a.next(), c.next());
  Rng r(1);
  std::vector<int> hist(5);
  for (int i = 0; i < 50000; ++i) ++hist[r.below(5)];
  for (const int h : hist) EXPECT_NEAR(h, 10000, 400);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ParallelFor, ResultsIndependentOfThreads) {
  auto run = [](unsigned threads) {
    std::vector<std::uint64_t> out(1000);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = splitmix64(i); }, threads);
    return out;
  };
  EXPECT_EQ(run(1), run(8));
}

TEST(ParallelFor, PropagatesException) {
  EXPECT_THROW(parallel_for(
                   100, [](std::size_t i) {
                     if (i == 57) throw Error("boom");
                   },
                   4),
               Error);
}

TEST(Files, AtomicWriteRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "oatlas_util_atomic.txt";
  write_file_atomic(path, "hello\n");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
  EXPECT_THROW(read_file(path), Error);
}
