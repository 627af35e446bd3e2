#include "iotgw/transport/stream.hpp"

#include "iotgw/error.hpp"

namespace iotgw::transport {

void Notifier::notify() {
  {
    std::lock_guard lk(mu_);
    ++seq_;
  }
  cv_.notify_all();
}

std::uint64_t Notifier::sequence() const {
  std::lock_guard lk(mu_);
  return seq_;
}

void Notifier::wait_for(std::uint64_t seen, std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] { return seq_ != seen; });
}

namespace {

// One direction of a pipe.
struct Channel {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> buf;
  bool closed = false;
  std::shared_ptr<Notifier> reader_notifier;
};

class PipeEnd final : public ByteStream {
 public:
  PipeEnd(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out, std::string peer)
      : in_(std::move(in)), out_(std::move(out)), peer_(std::move(peer)) {}

  ~PipeEnd() override { close(); }

  void write(ByteView bytes) override {
    std::shared_ptr<Notifier> n;
    {
      std::lock_guard lk(out_->mu);
      if (out_->closed) fail(Errc::LinkClosed, peer_);
      out_->buf.insert(out_->buf.end(), bytes.begin(), bytes.end());
      n = out_->reader_notifier;
    }
    out_->cv.notify_all();
    if (n) n->notify();
  }

  std::size_t read_some(Bytes& out) override {
    std::lock_guard lk(in_->mu);
    const auto n = in_->buf.size();
    out.insert(out.end(), in_->buf.begin(), in_->buf.end());
    in_->buf.clear();
    return n;
  }

  bool wait_readable(std::chrono::milliseconds timeout) override {
    std::unique_lock lk(in_->mu);
    return in_->cv.wait_for(lk, timeout, [&] { return !in_->buf.empty() || in_->closed; }) &&
           !in_->buf.empty();
  }

  void close() override {
    for (auto* ch : {in_.get(), out_.get()}) {
      std::shared_ptr<Notifier> n;
      {
        std::lock_guard lk(ch->mu);
        if (ch->closed) continue;
        ch->closed = true;
        n = ch->reader_notifier;
      }
      ch->cv.notify_all();
      if (n) n->notify();
    }
  }

  bool closed() const override {
    std::lock_guard lk(in_->mu);
    return in_->closed;
  }

  void set_notifier(std::shared_ptr<Notifier> n) override {
    {
      std::lock_guard lk(in_->mu);
      in_->reader_notifier = n;
    }
    if (n) n->notify();
  }

  std::string peer() const override { return peer_; }

 private:
  std::shared_ptr<Channel> in_;
  std::shared_ptr<Channel> out_;
  std::string peer_;
};

}  // namespace

std::pair<StreamPtr, StreamPtr> make_pipe(std::string a_name, std::string b_name) {
  auto ab = std::make_shared<Channel>();
  auto ba = std::make_shared<Channel>();
  // Each end reports the *other* end as its peer.
  auto a = std::make_shared<PipeEnd>(ba, ab, b_name);
  auto b = std::make_shared<PipeEnd>(ab, ba, a_name);
  return {a, b};
}

// ---------------------------------------------------------------------------

MemoryAcceptor::MemoryAcceptor(std::string name) : name_(std::move(name)) {}

StreamPtr MemoryAcceptor::connect(const std::string& peer_name) {
  std::shared_ptr<Notifier> n;
  StreamPtr client;
  {
    std::lock_guard lk(mu_);
    if (closed_) fail(Errc::GatewayUnreachable, name_);
    auto [client_end, server_end] = make_pipe(peer_name + "#" + std::to_string(++counter_), name_);
    pending_.push_back(server_end);
    client = client_end;
    n = notifier_;
  }
  if (n) n->notify();
  return client;
}

Connector MemoryAcceptor::connector(std::string peer_name) {
  std::weak_ptr<MemoryAcceptor> weak = weak_from_this();
  return [weak, peer_name = std::move(peer_name)]() -> StreamPtr {
    auto self = weak.lock();
    if (!self) fail(Errc::GatewayUnreachable, peer_name);
    return self->connect(peer_name);
  };
}

StreamPtr MemoryAcceptor::try_accept() {
  std::lock_guard lk(mu_);
  if (pending_.empty()) return nullptr;
  auto s = pending_.front();
  pending_.pop_front();
  return s;
}

void MemoryAcceptor::set_notifier(std::shared_ptr<Notifier> n) {
  std::lock_guard lk(mu_);
  notifier_ = std::move(n);
}

void MemoryAcceptor::close() {
  std::deque<StreamPtr> dropped;
  {
    std::lock_guard lk(mu_);
    closed_ = true;
    dropped.swap(pending_);
  }
  for (auto& s : dropped) s->close();
}

}  // namespace iotgw::transport
