// Copyright 2026 The adscreen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adscreen/server.hpp"

#include <atomic>
#include <deque>
#include <random>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "adscreen/error.hpp"

namespace adscreen {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

SessionOptions ServiceResources::session_options() const {
  SessionOptions o;
  o.block_size = config.block_size_pairs;
  o.pause_min_s = config.pause_min_s;
  o.vad_threshold_db = config.vad_threshold_db;
  o.typing_rate_wpm = config.typing_rate_wpm;
  o.robot_wpm = config.robot_wpm;
  return o;
}

ServiceResources load_service_resources(const ServiceConfig& config) {
  config.validate();
  ListenerResources listener = load_listener_resources(
      config.listener_config(), config.qa_db, config.topics, config.formulaic, config.ngram_corpus);
  DetectorModels models;
  if (config.models_dir.empty()) {
    EmbeddingTable emb = config.embeddings.empty() ? EmbeddingTable() : EmbeddingTable::load(config.embeddings);
    models = DetectorModels::untrained(acoustic_layout::kDim, Vocabulary(), std::move(emb));
  } else {
    models = DetectorModels::load(config.models_dir);
    const auto act = config.models_dir / "dialogue_act.model";
    if (std::filesystem::exists(act)) {
      listener.act_model = load_model(act, 2);
      listener.act_embeddings = models.embeddings;
    }
  }
  std::optional<ExternalFeatures> external;
  if (!config.external_features.empty()) external = load_external_features(config.external_features);
  return {config, std::move(listener), std::move(models), std::move(external)};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxMessageBytes = 16u << 20;

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}();
  char buf[32];
  std::snprintf(buf, sizeof buf, "s-%06llx-%04llx",
                static_cast<unsigned long long>(salt & 0xffffff),
                static_cast<unsigned long long>(++counter));
  return buf;
}

double unix_now() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const ServiceResources& res, MedicalLogWriter& log)
      : socket_(std::move(socket)), timer_(socket_.get_executor()), res_(res), log_(log) {}

  void start() { read_raw(); }

 private:
  // ---- clock ---------------------------------------------------------------
  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }

  // ---- transport -----------------------------------------------------------
  void read_raw() {
    socket_.async_read_some(net::buffer(chunk_), [self = shared_from_this()](beast::error_code ec,
                                                                              std::size_t n) {
      self->on_raw(ec, n);
    });
  }

  void on_raw(beast::error_code ec, std::size_t n) {
    if (ec) return on_disconnect();
    inbuf_.append(chunk_.data(), n);
    if (!mode_decided_) {
      if (inbuf_.size() < 4 && inbuf_.find('\n') == std::string::npos) return read_raw();
      mode_decided_ = true;
      if (inbuf_.rfind("GET ", 0) == 0) return upgrade();
    }
    std::size_t pos;
    while ((pos = inbuf_.find('\n')) != std::string::npos) {
      std::string line = inbuf_.substr(0, pos);
      inbuf_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) on_line(line);
    }
    if (inbuf_.size() > kMaxMessageBytes) {
      inbuf_.clear();
      send(ErrorMsg{kBadMessage, "message exceeds the size limit"});
    }
    if (!closing_) read_raw();
  }

  void upgrade() {
    auto mb = http_buf_.prepare(inbuf_.size());
    net::buffer_copy(mb, net::buffer(inbuf_));
    http_buf_.commit(inbuf_.size());
    inbuf_.clear();
    http::async_read(socket_, http_buf_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_request(ec);
                     });
  }

  void on_request(beast::error_code ec) {
    if (ec) return on_disconnect();
    if (!websocket::is_upgrade(request_)) {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::bad_request,
                                                                     request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "WebSocket upgrade required\n";
      res->prepare_payload();
      http::async_write(socket_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
      });
      return;
    }
    ws_.emplace(std::move(socket_));
    ws_->read_message_max(kMaxMessageBytes);
    ws_->async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->on_disconnect();
      self->read_ws();
    });
  }

  void read_ws() {
    ws_->async_read(ws_buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->on_disconnect();
      std::string text = beast::buffers_to_string(self->ws_buf_.data());
      self->ws_buf_.consume(self->ws_buf_.size());
      std::size_t start = 0;
      while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) self->on_line(line);
        start = end + 1;
      }
      if (!self->closing_) self->read_ws();
    });
  }

  void send(const ServerMessage& m) {
    outq_.push_back(encode(m));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outq_.empty()) {
      writing_ = false;
      if (closing_) close_transport();
      return;
    }
    writing_ = true;
    auto self = shared_from_this();
    auto done = [self](beast::error_code ec, std::size_t) {
      self->outq_.pop_front();
      if (ec) {
        self->outq_.clear();
        self->writing_ = false;
        return;
      }
      self->write_next();
    };
    if (ws_) {
      ws_->text(true);
      ws_->async_write(net::buffer(outq_.front()), done);
    } else {
      outq_.front().push_back('\n');
      net::async_write(socket_, net::buffer(outq_.front()), done);
    }
  }

  void close_transport() {
    timer_.cancel();
    if (ws_) {
      ws_->async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    } else {
      beast::error_code ignored;
      socket_.shutdown(tcp::socket::shutdown_both, ignored);
      socket_.close(ignored);
    }
  }

  // ---- session -------------------------------------------------------------
  void on_line(const std::string& line) {
    if (closing_) return;
    ClientMessage msg;
    try {
      msg = decode_client(line);
    } catch (const Error& e) {
      send(ErrorMsg{kBadMessage, e.what()});
      return;
    }
    std::visit([this](auto& m) { on_message(m); }, msg);
  }

  void on_message(const HelloMsg& h) {
    if (runner_) {
      send(ErrorMsg{kProtocolError, "session already started"});
      return;
    }
    runner_ = std::make_unique<SessionRunner>(res_.listener, res_.models, res_.session_options(),
                                              res_.external ? &*res_.external : nullptr);
    origin_ = std::chrono::steady_clock::now();
    const std::string id = new_session_id();
    spdlog::info("session {} opened by client '{}'", id, h.client);
    send(WelcomeMsg{id, res_.config.silence_threshold_s, res_.config.block_size_pairs});
    dispatch(SessionStart{id, 0.0, unix_now()});
  }

  void on_message(const UtteranceMsg& u) {
    if (!runner_) {
      send(ErrorMsg{kProtocolError, "send hello first"});
      return;
    }
    UserUtteranceIn in;
    in.text = u.text;
    in.arrival = now();
    // The server clock decides when the turn ended; a client-reported typing
    // span only contributes its duration.
    if (u.t_start && u.t_end && *u.t_end >= *u.t_start) {
      in.t_end = in.arrival;
      in.t_start = in.arrival - (*u.t_end - *u.t_start);
    }
    if (u.audio_b64) {
      try {
        const auto bytes = base64_decode(*u.audio_b64);
        in.audio = decode_wav(bytes);
      } catch (const Error& e) {
        send(ErrorMsg{kBadMessage, std::string("audio_b64: ") + e.what()});
        return;
      }
    }
    dispatch(in);
  }

  void on_message(const ByeMsg&) {
    if (runner_ && !runner_->ended()) dispatch(SessionEnd{std::max(now(), runner_->now())});
    closing_ = true;
    if (!writing_) close_transport();
  }

  void dispatch(const SessionEvent& ev) {
    StepOutput out;
    try {
      out = runner_->handle(ev);
    } catch (const Error& e) {
      const bool protocol = e.code() == ErrorCode::kProtocolViolation ||
                            e.code() == ErrorCode::kClockRegression;
      send(ErrorMsg{protocol ? kProtocolError : kBadMessage, e.what()});
      return;
    } catch (const std::exception& e) {
      spdlog::error("session {}: {}", runner_->dialogue().session_id, e.what());
      send(ErrorMsg{kInternalError, e.what()});
      return;
    }
    for (auto& rec : out.records) log_.push(std::move(rec));
    for (const auto& m : out.messages) send(to_wire(m));
    arm_timer();
  }

  void arm_timer() {
    timer_.cancel();
    if (!runner_ || runner_->ended()) return;
    const auto deadline = runner_->silence_deadline();
    if (!deadline) return;
    const auto at = origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(*deadline));
    timer_.expires_at(at);
    const std::uint64_t gen = ++timer_gen_;
    timer_.async_wait([self = shared_from_this(), gen, d = *deadline](beast::error_code ec) {
      if (ec || gen != self->timer_gen_ || !self->runner_ || self->runner_->ended()) return;
      self->dispatch(Tick{std::max(d, self->now())});
    });
  }

  void on_disconnect() {
    closing_ = true;
    timer_.cancel();
    if (runner_ && !runner_->ended()) {
      try {
        StepOutput out = runner_->handle(SessionEnd{std::max(now(), runner_->now())});
        for (auto& rec : out.records) log_.push(std::move(rec));
      } catch (const std::exception& e) {
        spdlog::error("closing session: {}", e.what());
      }
    }
  }

  tcp::socket socket_;
  std::optional<websocket::stream<tcp::socket>> ws_;
  net::steady_timer timer_;
  const ServiceResources& res_;
  MedicalLogWriter& log_;

  std::array<char, 8192> chunk_{};
  std::string inbuf_;
  bool mode_decided_ = false;
  beast::flat_buffer http_buf_;
  http::request<http::string_body> request_;
  beast::flat_buffer ws_buf_;

  std::deque<std::string> outq_;
  bool writing_ = false;
  bool closing_ = false;

  std::unique_ptr<SessionRunner> runner_;
  std::chrono::steady_clock::time_point origin_ = std::chrono::steady_clock::now();
  std::uint64_t timer_gen_ = 0;
};

}  // namespace

struct Server::Impl {
  const ServiceResources& res;
  MedicalLogWriter& log;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;

  Impl(const ServiceResources& r, MedicalLogWriter& l) : res(r), log(l) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
      if (ec == net::error::operation_aborted) return;
      if (!ec) std::make_shared<Connection>(std::move(s), res, log)->start();
      accept();
    });
  }
};

Server::Server(const ServiceResources& resources, MedicalLogWriter& log, std::uint16_t port,
               const std::string& address)
    : impl_(std::make_unique<Impl>(resources, log)) {
  beast::error_code ec;
  const auto addr = net::ip::make_address(address, ec);
  if (ec) throw Error(ErrorCode::kBindError, "bad address '" + address + "'");
  const tcp::endpoint ep(addr, port);
  auto& a = impl_->acceptor;
  auto fail = [&](const char* what) {
    throw Error(ErrorCode::kBindError, std::string(what) + " " + address + ":" +
                                           std::to_string(port) + ": " + ec.message());
  };
  if (a.open(ep.protocol(), ec)) fail("cannot open");
  if (a.set_option(net::socket_base::reuse_address(true), ec)) fail("cannot configure");
  if (a.bind(ep, ec)) fail("cannot bind");
  if (a.listen(net::socket_base::max_listen_connections, ec)) fail("cannot listen on");
  impl_->accept();
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start(unsigned threads) {
  impl_->work.emplace(impl_->ioc.get_executor());
  for (unsigned i = 0; i < std::max(1u, threads); ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
}

void Server::run(unsigned threads) {
  start(threads);
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

void Server::stop() {
  if (!impl_) return;
  impl_->work.reset();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  impl_->threads.clear();
}

// ---------------------------------------------------------------------------

struct LineClient::Impl {
  net::io_context ioc;
  tcp::socket socket{ioc};
  std::string buf;
  bool closed = false;
};

LineClient::LineClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  beast::error_code ec;
  tcp::resolver resolver(impl_->ioc);
  const auto eps = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) net::connect(impl_->socket, eps, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot connect to " + host + ":" + std::to_string(port) +
                                               ": " + ec.message());
}

LineClient::~LineClient() {
  beast::error_code ignored;
  impl_->socket.close(ignored);
}

void LineClient::send(const ClientMessage& m) { send_raw(encode(m) + "\n"); }

void LineClient::send_raw(const std::string& bytes) {
  beast::error_code ec;
  net::write(impl_->socket, net::buffer(bytes), ec);
  if (ec) throw Error(ErrorCode::kIoError, "send failed: " + ec.message());
}

std::optional<ServerMessage> LineClient::receive(std::chrono::milliseconds timeout) {
  auto& s = *impl_;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto pos = s.buf.find('\n');
    if (pos != std::string::npos) {
      const std::string line = s.buf.substr(0, pos);
      s.buf.erase(0, pos + 1);
      return decode_server(line);
    }
    if (s.closed) return std::nullopt;
    const auto left = deadline - std::chrono::steady_clock::now();
    if (left <= std::chrono::steady_clock::duration::zero()) return std::nullopt;
    std::array<char, 4096> chunk{};
    bool done = false;
    beast::error_code result;
    s.socket.async_read_some(net::buffer(chunk), [&](beast::error_code ec, std::size_t n) {
      done = true;
      result = ec;
      if (!ec) s.buf.append(chunk.data(), n);
    });
    s.ioc.restart();
    s.ioc.run_for(left);
    if (!done) {
      s.socket.cancel();
      s.ioc.restart();
      s.ioc.run();
      if (result == net::error::operation_aborted) return std::nullopt;
    }
    if (result) s.closed = true;
  }
}

}  // namespace adscreen
