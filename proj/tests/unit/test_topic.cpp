#include <doctest.h>

#include "iotgw/mqtt/topic.hpp"
#include "support/mqtt_generators.hpp"

using namespace iotgw::mqtt;

TEST_CASE("topic matching examples") {
  CHECK(topic_matches("a/b", "a/b"));
  CHECK(topic_matches("piico/+/n1/#", "piico/gw1/n1/s3/reading"));
  CHECK_FALSE(topic_matches("a/#", "b"));
  CHECK(topic_matches("a/#", "a"));
  CHECK(topic_matches("a/#", "a/b/c"));
  CHECK(topic_matches("+/+", "a/b"));
  CHECK_FALSE(topic_matches("+/+", "a/b/c"));
  CHECK_FALSE(topic_matches("+", "a/b"));
  CHECK(topic_matches("+", ""));
  CHECK(topic_matches("a/+/c", "a//c"));
  CHECK_FALSE(topic_matches("a/b", "a/b/c"));
  CHECK_FALSE(topic_matches("a/b/c", "a/b"));
  CHECK(topic_matches("dat/gw1/+/temp", "dat/gw1/n1/temp"));
  CHECK(topic_matches("cfg/gw1/n1", "cfg/gw1/n1"));
}

TEST_CASE("filter validity") {
  CHECK(valid_topic_filter("#"));
  CHECK(valid_topic_filter("+"));
  CHECK(valid_topic_filter("a/+/b/#"));
  CHECK(valid_topic_filter("/"));
  CHECK_FALSE(valid_topic_filter(""));
  CHECK_FALSE(valid_topic_filter("a/#/b"));
  CHECK_FALSE(valid_topic_filter("a#"));
  CHECK_FALSE(valid_topic_filter("a/b+"));
  CHECK_FALSE(valid_topic_filter("#/#"));
  CHECK(valid_topic_name("a/b"));
  CHECK_FALSE(valid_topic_name(""));
  CHECK_FALSE(valid_topic_name("a/+"));
  CHECK_FALSE(valid_topic_name("a/#"));
}

TEST_CASE("hash matches every valid topic") {
  iotgw::testing::Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const auto t = iotgw::testing::random_topic(rng);
    REQUIRE(valid_topic_name(t));
    REQUIRE(topic_matches("#", t));
  }
}

TEST_CASE("a wildcard-free filter matches exactly itself") {
  iotgw::testing::Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const auto f = iotgw::testing::random_topic(rng, 4);
    const auto other = iotgw::testing::random_topic(rng, 4);
    REQUIRE(topic_matches(f, f));
    REQUIRE(topic_matches(f, other) == (f == other));
    REQUIRE_FALSE(topic_matches(f, f + "/x"));
    if (f.find('/') != std::string::npos) REQUIRE_FALSE(topic_matches(f, f.substr(0, f.rfind('/'))));
  }
}

TEST_CASE("generated filters agree with a regex-free reference matcher") {
  // Reference: split both on '/', compare level by level.
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      const auto slash = s.find('/', start);
      out.push_back(s.substr(start, slash - start));
      if (slash == std::string::npos) return out;
      start = slash + 1;
    }
  };
  auto reference = [&](const std::string& f, const std::string& t) {
    const auto fl = split(f);
    const auto tl = split(t);
    for (std::size_t i = 0; i < fl.size(); ++i) {
      if (fl[i] == "#") return true;
      if (i >= tl.size()) return false;
      if (fl[i] != "+" && fl[i] != tl[i]) return false;
    }
    return fl.size() == tl.size();
  };
  iotgw::testing::Rng rng(7);
  for (int i = 0; i < 5000; ++i) {
    auto f = iotgw::testing::random_filter(rng);
    // Derive the topic from the filter half the time so matches are common.
    std::string t;
    if (i % 2 == 0) {
      for (const auto& level : split(f)) {
        if (!t.empty() || level != split(f).front()) t += '/';
        t += level == "+" ? "v" : level == "#" ? "tail/more" : level;
      }
      if (t.empty()) t = "x";
    } else {
      t = iotgw::testing::random_topic(rng, 5);
    }
    REQUIRE(valid_topic_filter(f));
    REQUIRE(topic_matches(f, t) == reference(f, t));
  }
}
