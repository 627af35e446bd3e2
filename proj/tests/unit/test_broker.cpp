#include <doctest.h>

#include "iotgw/mqtt/broker.hpp"
#include "iotgw/mqtt/client.hpp"
#include "iotgw/mqtt/topic.hpp"
#include "support/error_of.hpp"
#include "support/mqtt_generators.hpp"

using namespace iotgw;
using namespace iotgw::mqtt;
using namespace std::chrono_literals;
using iotgw::testing::error_of;

namespace {

const TimePoint t0 = TimePoint{} + std::chrono::hours(24 * 365 * 50);

Bytes bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// A raw MQTT peer that lets a test script every packet by hand.
struct RawPeer {
  PacketChannel ch;
  explicit RawPeer(Broker& b, std::string id, std::uint16_t keep_alive = 0) : ch(nullptr) {
    auto [client_end, broker_end] = transport::make_pipe(id, "broker");
    ch = PacketChannel(client_end);
    b.attach(broker_end);
    ch.send(Connect{std::move(id), keep_alive});
  }
  std::vector<Packet> drain() {
    std::vector<Packet> out;
    while (auto p = ch.next()) out.push_back(std::move(*p));
    return out;
  }
  std::vector<Publish> publishes() {
    std::vector<Publish> out;
    for (auto& p : drain()) {
      if (auto* pub = std::get_if<Publish>(&p)) out.push_back(std::move(*pub));
    }
    return out;
  }
};

struct Harness {
  Broker broker;
  std::vector<std::unique_ptr<Client>> clients;

  explicit Harness(BrokerOptions o = {}) : broker(o) {}

  Client& client(std::string id, ClientOptions o = {}) {
    auto [client_end, broker_end] = transport::make_pipe(id, "broker");
    broker.attach(broker_end);
    o.client_id = std::move(id);
    clients.push_back(std::make_unique<Client>(client_end, o));
    clients.back()->connect(t0);
    return *clients.back();
  }

  void settle(TimePoint now) {
    for (int i = 0; i < 1000; ++i) {
      bool progress = broker.pump(now);
      for (auto& c : clients) progress |= c->pump(now);
      if (!progress) return;
    }
    FAIL("did not settle");
  }
};

}  // namespace

TEST_CASE("retained config reaches late subscribers") {
  Harness h;
  auto& gw = h.client("gw");
  auto& early = h.client("early");
  h.settle(t0);
  early.subscribe("cfg/n1", 1, t0);
  h.settle(t0);

  gw.publish("cfg/n1", bytes("interval=6"), 1, true, t0);
  gw.publish("cfg/n1", bytes("interval=12"), 1, true, t0);
  h.settle(t0);
  auto got = early.poll();
  REQUIRE(got.size() == 2);
  CHECK_FALSE(got[0].retain);
  CHECK(got[1].payload == bytes("interval=12"));

  auto& late = h.client("late");
  h.settle(t0);
  auto sub = late.subscribe("cfg/+", 1, t0);
  h.settle(t0);
  CHECK(sub->done());
  CHECK(sub->granted() == std::vector<std::uint8_t>{1});
  got = late.poll();
  REQUIRE(got.size() == 1);
  CHECK(got[0].topic == "cfg/n1");
  CHECK(got[0].payload == bytes("interval=12"));
  CHECK(got[0].retain);
  CHECK(got[0].qos == 1);

  // An empty retained payload clears the slot.
  gw.publish("cfg/n1", {}, 0, true, t0);
  h.settle(t0);
  CHECK_FALSE(h.broker.retained("cfg/n1").has_value());
}

TEST_CASE("withheld PUBACK triggers redelivery with dup after the retry interval") {
  Broker broker(BrokerOptions{.retry_interval = 2000ms});
  RawPeer sub(broker, "sub");
  broker.pump(t0);
  sub.ch.send(Subscribe{1, {{"dat/#", 1}}});
  broker.pump(t0);
  auto acks = sub.drain();
  REQUIRE(acks.size() == 2);
  CHECK(acks[0] == Packet{Connack{0}});
  CHECK(acks[1] == Packet{Suback{1, {1}}});

  broker.publish_local("dat/gw1/n1/temp", bytes("25.0"), 1, false, t0);
  auto first = sub.publishes();
  REQUIRE(first.size() == 1);
  CHECK_FALSE(first[0].dup);
  REQUIRE(first[0].packet_id.has_value());

  broker.pump(t0 + 1999ms);
  CHECK(sub.publishes().empty());
  CHECK(broker.next_deadline() == t0 + 2000ms);

  broker.pump(t0 + 2000ms);
  auto again = sub.publishes();
  REQUIRE(again.size() == 1);
  CHECK(again[0].dup);
  CHECK(again[0].packet_id == first[0].packet_id);
  CHECK(again[0].payload == first[0].payload);
  CHECK(broker.stats().retransmissions == 1);

  broker.pump(t0 + 4000ms);
  REQUIRE(sub.publishes().size() == 1);

  sub.ch.send(Puback{*first[0].packet_id});
  broker.pump(t0 + 4001ms);
  broker.pump(t0 + 60000ms);
  CHECK(sub.publishes().empty());
  CHECK(broker.stats().retransmissions == 2);
}

TEST_CASE("overlapping filters deliver once per session") {
  Harness h;
  auto& both = h.client("both");
  auto& one = h.client("one");
  auto& pub = h.client("pub");
  h.settle(t0);
  both.subscribe("a/+", 0, t0);
  both.subscribe("a/#", 1, t0);
  one.subscribe("a/#", 1, t0);
  h.settle(t0);

  pub.publish("a/b", bytes("x"), 1, false, t0);
  h.settle(t0);
  const auto b = both.poll();
  REQUIRE(b.size() == 1);
  CHECK(b[0].qos == 1);  // highest granted among matching filters
  CHECK(one.poll().size() == 1);
  CHECK(pub.poll().empty());
}

TEST_CASE("qos is the minimum of publish and subscription") {
  Harness h;
  auto& s0 = h.client("s0");
  auto& s1 = h.client("s1");
  auto& pub = h.client("pub");
  h.settle(t0);
  s0.subscribe("t", 0, t0);
  auto tok = s1.subscribe("t", 2, t0);
  h.settle(t0);
  CHECK(tok->granted() == std::vector<std::uint8_t>{1});
  pub.publish("t", bytes("q1"), 1, false, t0);
  pub.publish("t", bytes("q0"), 0, false, t0);
  h.settle(t0);
  const auto a = s0.poll();
  const auto b = s1.poll();
  REQUIRE(a.size() == 2);
  REQUIRE(b.size() == 2);
  CHECK(a[0].qos == 0);
  CHECK(b[0].qos == 1);
  CHECK(b[1].qos == 0);
}

TEST_CASE("inbound duplicate publishes are suppressed by packet id") {
  Harness h;
  auto& sub = h.client("sub");
  h.settle(t0);
  sub.subscribe("x/#", 1, t0);
  h.settle(t0);

  RawPeer pub(h.broker, "pub");
  h.settle(t0);
  Publish p{"x/y", bytes("once"), 1, 42, false, false};
  pub.ch.send(p);
  p.dup = true;
  pub.ch.send(p);
  h.settle(t0);
  const auto replies = pub.drain();
  // CONNACK plus a PUBACK for each copy.
  CHECK(std::count(replies.begin(), replies.end(), Packet{Puback{42}}) == 2);
  CHECK(sub.poll().size() == 1);
  CHECK(h.broker.stats().dup_suppressed == 1);

  // Same id without dup is a new message.
  p.dup = false;
  pub.ch.send(p);
  h.settle(t0);
  CHECK(sub.poll().size() == 1);
}

TEST_CASE("broker conservation over random subscriptions") {
  iotgw::testing::Rng rng(99);
  for (int round = 0; round < 20; ++round) {
    Harness h(BrokerOptions{.max_inflight = 8});
    const int n_sessions = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<std::vector<std::string>> filters(n_sessions);
    for (int i = 0; i < n_sessions; ++i) {
      auto& c = h.client("c" + std::to_string(i));
      h.settle(t0);
      const int n_filters = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int k = 0; k < n_filters; ++k) {
        filters[i].push_back(iotgw::testing::random_filter(rng));
        c.subscribe(filters[i].back(), 1, t0);
      }
    }
    auto& pub = h.client("publisher");
    h.settle(t0);

    std::vector<std::string> topics;
    for (int i = 0; i < 200; ++i) {
      // Mix random topics with ones built to hit the filters.
      std::string t = iotgw::testing::random_topic(rng, 4);
      if (i % 2 == 0) {
        const auto& f = filters[i % n_sessions].front();
        t.clear();
        for (char ch : f) t += ch == '+' ? 'v' : ch == '#' ? 'w' : ch;
      }
      topics.push_back(t);
      pub.publish(t, bytes(std::to_string(i)), 1, false, t0);
      if (i % 17 == 0) h.settle(t0);
    }
    h.settle(t0);

    for (int i = 0; i < n_sessions; ++i) {
      std::vector<std::string> expected;
      for (std::size_t m = 0; m < topics.size(); ++m) {
        const bool match = std::any_of(filters[i].begin(), filters[i].end(),
                                       [&](const auto& f) { return topic_matches(f, topics[m]); });
        if (match) expected.push_back(std::to_string(m));
      }
      std::vector<std::string> got;
      for (const auto& p : h.clients[i]->poll()) got.emplace_back(p.payload.begin(), p.payload.end());
      REQUIRE(got == expected);
    }
  }
}

TEST_CASE("protocol violation closes only the offending session") {
  Harness h;
  auto& good = h.client("good");
  h.settle(t0);
  good.subscribe("t", 0, t0);
  h.settle(t0);

  auto [bad_end, broker_end] = transport::make_pipe("bad", "broker");
  h.broker.attach(broker_end);
  bad_end->write(Bytes{0xF0, 0x00});
  h.settle(t0);
  CHECK(bad_end->closed());
  CHECK(h.broker.stats().protocol_violations == 1);

  // Publishing before CONNECT is a violation too.
  RawPeer early(h.broker, "tmp");
  auto [raw, broker_end2] = transport::make_pipe("raw", "broker");
  h.broker.attach(broker_end2);
  raw->write(encode_packet(Publish{"t", bytes("x"), 0, std::nullopt, false, false}));
  h.settle(t0);
  CHECK(raw->closed());

  h.broker.publish_local("t", bytes("still here"), 0, false, t0);
  h.settle(t0);
  CHECK(good.connected());
  CHECK(good.poll().size() == 1);
}

TEST_CASE("ping, keep-alive and duplicate client ids") {
  Broker broker;
  RawPeer p(broker, "p", 10);
  broker.pump(t0);
  p.ch.send(Pingreq{});
  broker.pump(t0 + 1s);
  const auto replies = p.drain();
  REQUIRE(replies.size() == 2);
  CHECK(replies[1] == Packet{Pingresp{}});

  broker.pump(t0 + 16s);
  CHECK_FALSE(p.ch.stream().closed());
  broker.pump(t0 + 16001ms);
  CHECK(p.ch.stream().closed());

  RawPeer first(broker, "same");
  broker.pump(t0);
  RawPeer second(broker, "same");
  broker.pump(t0);
  CHECK(first.ch.stream().closed());
  CHECK_FALSE(second.ch.stream().closed());
  CHECK(broker.client_ids() == std::vector<std::string>{"same"});
}

TEST_CASE("client tokens") {
  Harness h;
  auto& c = h.client("c");
  // Queued before CONNACK, resolved once the broker acknowledges.
  auto q1 = c.publish("a", bytes("1"), 1, false, t0);
  auto q0 = c.publish("a", bytes("0"), 0, false, t0);
  CHECK(q0->done());
  CHECK_FALSE(q1->done());
  h.settle(t0);
  CHECK(q1->done());
  CHECK_FALSE(q1->error().has_value());
  CHECK(h.broker.stats().publishes_received == 2);

  c.disconnect();
  CHECK(error_of([&] { c.publish("a", bytes("x"), 1, false, t0); }) == Errc::NotConnected);
  CHECK(error_of([&] { c.publish("a", bytes("x"), 0, false, t0); }) == Errc::NotConnected);
}

TEST_CASE("client gives up after the retry budget") {
  auto [client_end, peer_end] = transport::make_pipe("c", "silent");
  PacketChannel peer(peer_end);
  Client c(client_end, ClientOptions{.client_id = "c", .keep_alive = 0, .retry_interval = 2000ms, .retry_budget = 3});
  c.connect(t0);
  peer.send(Connack{0});
  c.pump(t0);
  auto tok = c.publish("a", bytes("x"), 1, false, t0);
  for (int i = 1; i <= 3; ++i) c.pump(t0 + i * 2000ms);
  CHECK_FALSE(tok->done());
  c.pump(t0 + 8000ms);
  CHECK(tok->done());
  CHECK(tok->error() == Errc::Timeout);
  CHECK(c.stats().retransmissions == 3);

  int dups = 0;
  while (auto p = peer.next()) {
    if (auto* pub = std::get_if<Publish>(&*p)) dups += pub->dup;
  }
  CHECK(dups == 3);
}

TEST_CASE("pending tokens fail when the session drops") {
  auto [client_end, peer_end] = transport::make_pipe("c", "peer");
  Client c(client_end, ClientOptions{.client_id = "c"});
  c.connect(t0);
  auto tok = c.publish("a", bytes("x"), 1, false, t0);
  peer_end->close();
  c.pump(t0);
  CHECK(c.closed());
  CHECK(tok->error() == Errc::NotConnected);
}

TEST_CASE("idle client pings within its keep-alive") {
  Harness h;
  auto& c = h.client("c", ClientOptions{.keep_alive = 10});
  h.settle(t0);
  for (int s = 1; s <= 120; ++s) h.settle(t0 + std::chrono::seconds(s));
  CHECK(c.connected());
  CHECK(h.broker.session_count() == 1);
}
