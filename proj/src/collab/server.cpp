#include "policypad/collab/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <random>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "policypad/core/errors.hpp"

namespace ppad::collab {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

// One upgraded client. Reads run on the connection's strand; frames are
// handed to a worker thread so a slow gateway call never stalls the io
// threads; writes are queued so Session::broadcast never blocks on a socket.
class WsConnection : public ClientChannel, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<Session> session)
      : ws_(std::move(socket)), session_(std::move(session)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  void send(const WireMessage& m) override {
    auto text = std::make_shared<std::string>(serialize(m));
    net::post(ws_.get_executor(), [self = shared_from_this(), text] {
      if (self->closing_) return;
      self->outbox_.push_back(std::move(*text));
      if (self->outbox_.size() == 1) self->write_next();
    });
  }

  void close(std::string_view reason) override {
    net::post(ws_.get_executor(), [self = shared_from_this(), why = std::string(reason)] {
      self->close_reason_ = why;
      self->close_requested_ = true;
      if (self->outbox_.empty()) self->do_close();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    conn_ = session_->attach(shared_from_this());
    std::thread(&WsConnection::work, shared_from_this()).detach();
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    {
      std::lock_guard lock(inbox_mu_);
      inbox_.push_back(beast::buffers_to_string(buffer_.data()));
    }
    inbox_cv_.notify_one();
    buffer_.consume(buffer_.size());
    read_next();
  }

  void work() {
    for (;;) {
      std::string frame;
      {
        std::unique_lock lock(inbox_mu_);
        inbox_cv_.wait(lock, [&] { return stopped_ || !inbox_.empty(); });
        if (inbox_.empty()) return;
        frame = std::move(inbox_.front());
        inbox_.pop_front();
      }
      session_->handle_frame(conn_, frame);
    }
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) {
      write_next();
    } else if (close_requested_) {
      do_close();
    }
  }

  void do_close() {
    if (closing_) return;
    closing_ = true;
    websocket::close_reason cr(websocket::close_code::policy_error);
    cr.reason = close_reason_.substr(0, 120);
    ws_.async_close(cr, [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    closing_ = true;
    {
      std::lock_guard lock(inbox_mu_);
      stopped_ = true;
    }
    inbox_cv_.notify_one();
    // Detach on the worker side of the session lock, never from inside a
    // session callback.
    std::thread([self = shared_from_this()] { self->session_->detach(self->conn_); }).detach();
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Session> session_;
  ConnectionId conn_ = 0;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::string close_reason_;
  bool close_requested_ = false;
  bool closing_ = false;
  bool finished_ = false;

  std::mutex inbox_mu_;
  std::condition_variable inbox_cv_;
  std::deque<std::string> inbox_;
  bool stopped_ = false;
};

std::string random_session_id() {
  static std::mt19937_64 rng{std::random_device{}()};
  static std::mutex mu;
  std::lock_guard lock(mu);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s-%012llx", static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

// Splits "/sessions/<id>/<rest>" into id and rest.
bool session_route(std::string_view target, std::string& id, std::string& rest) {
  constexpr std::string_view prefix = "/sessions/";
  if (target.substr(0, prefix.size()) != prefix) return false;
  target.remove_prefix(prefix.size());
  if (auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
  auto slash = target.find('/');
  if (slash == std::string_view::npos) return false;
  id = std::string(target.substr(0, slash));
  rest = std::string(target.substr(slash + 1));
  return !id.empty();
}

}  // namespace

struct Server::Impl {
  Impl(ServerOptions o, llm::LlmGateway& g) : options(std::move(o)), gateway(g), acceptor(ioc), ticker(ioc) {}

  ServerOptions options;
  llm::LlmGateway& gateway;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer ticker;
  std::vector<std::thread> threads;
  mutable std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  std::optional<std::filesystem::path> session_dir(const std::string& id) const {
    if (!options.data_dir) return std::nullopt;
    return *options.data_dir / "sessions" / id;
  }

  std::string create(const Seed& seed) {
    auto id = random_session_id();
    auto opts = options.session;
    opts.data_dir = session_dir(id);
    std::shared_ptr<Session> s = Session::create(id, seed, gateway, opts);
    std::lock_guard lock(mu);
    sessions.emplace(id, std::move(s));
    return id;
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void restore_all() {
    if (!options.data_dir) return;
    const auto root = *options.data_dir / "sessions";
    if (!std::filesystem::exists(root)) return;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
      if (!entry.is_directory()) continue;
      try {
        std::shared_ptr<Session> s = Session::restore(entry.path(), gateway, options.session);
        std::lock_guard lock(mu);
        sessions.emplace(s->id(), std::move(s));
      } catch (const Error& e) {
        std::cerr << "policypad: skipping " << entry.path() << ": " << e.what() << "\n";
      }
    }
  }

  void schedule_tick() {
    ticker.expires_after(std::chrono::milliseconds(options.session.heartbeat_ms));
    ticker.async_wait([this](beast::error_code ec) {
      if (ec) return;
      std::vector<std::shared_ptr<Session>> all;
      {
        std::lock_guard lock(mu);
        for (auto& [_, s] : sessions) all.push_back(s);
      }
      for (auto& s : all) s->tick();
      schedule_tick();
    });
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), *this)->read();
      accept();
    });
  }

  http::response<http::string_body> route(const http::request<http::string_body>& req) {
    auto reply = [&](http::status status, const json& body) {
      http::response<http::string_body> res{status, req.version()};
      res.set(http::field::content_type, "application/json");
      res.keep_alive(req.keep_alive());
      res.body() = body.dump();
      res.prepare_payload();
      return res;
    };
    const std::string target(req.target());
    try {
      if (target == "/healthz" && req.method() == http::verb::get) {
        std::lock_guard lock(mu);
        return reply(http::status::ok, {{"status", "ok"}, {"sessions", sessions.size()}});
      }
      if (target == "/sessions" && req.method() == http::verb::post) {
        Seed seed;
        if (!req.body().empty()) {
          seed = parse_seed(req.body());
        } else if (options.default_seed) {
          seed = *options.default_seed;
        }
        return reply(http::status::created, {{"sessionId", create(seed)}});
      }
      std::string id, rest;
      if (session_route(target, id, rest) && rest == "export" && req.method() == http::verb::get) {
        auto s = find(id);
        if (!s) return reply(http::status::not_found, {{"error", "not-found"}, {"message", "no session " + id}});
        return reply(http::status::ok, s->export_bundle());
      }
      return reply(http::status::not_found, {{"error", "not-found"}, {"message", "no route " + target}});
    } catch (const Error& e) {
      const auto status = e.code() == ErrorCode::kSeedParse ? http::status::bad_request
                          : e.code() == ErrorCode::kGateway ? http::status::bad_gateway
                                                            : http::status::internal_server_error;
      return reply(status, {{"error", to_string(e.code())}, {"message", e.what()}});
    }
  }

  class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
   public:
    HttpConnection(tcp::socket&& socket, Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

    void read() {
      req_ = {};
      stream_.expires_after(std::chrono::seconds(30));
      http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

   private:
    void on_read(beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(req_)) {
        std::string id, rest;
        if (session_route(std::string(req_.target()), id, rest) && rest == "ws") {
          if (auto s = impl_.find(id)) {
            stream_.expires_never();
            std::make_shared<WsConnection>(stream_.release_socket(), s)->run(std::move(req_));
            return;
          }
        }
        res_ = impl_.route(req_);  // 404
      } else {
        res_ = impl_.route(req_);
      }
      http::async_write(stream_, res_, beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res_.keep_alive()) {
        read();
      } else {
        beast::error_code ignored;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    }

    beast::tcp_stream stream_;
    Impl& impl_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    http::response<http::string_body> res_;
  };
};

Server::Server(ServerOptions options, llm::LlmGateway& gateway)
    : impl_(std::make_unique<Impl>(std::move(options), gateway)) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  impl_->restore_all();
  auto& a = impl_->acceptor;
  const tcp::endpoint ep{net::ip::make_address(impl_->options.address), impl_->options.port};
  a.open(ep.protocol());
  a.set_option(net::socket_base::reuse_address(true));
  a.bind(ep);
  a.listen(net::socket_base::max_listen_connections);
  impl_->accept();
  impl_->schedule_tick();
  for (std::size_t i = 0; i < std::max<std::size_t>(1, impl_->options.io_threads); ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
  return a.local_endpoint().port();
}

void Server::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
}

std::string Server::create_session(const Seed& seed) { return impl_->create(seed); }

std::shared_ptr<Session> Server::find_session(const std::string& id) const { return impl_->find(id); }

std::size_t Server::session_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sessions.size();
}

}  // namespace ppad::collab
