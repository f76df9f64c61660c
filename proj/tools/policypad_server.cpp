// policypad-server: hosts collaborative policy prototyping sessions over
// HTTP and WebSocket.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "policypad/collab/server.hpp"
#include "policypad/core/errors.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/llm/mock_provider.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) ppad::fail(ppad::ErrorCode::kConfig, "cannot open '" + path + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) ppad::fail(ppad::ErrorCode::kConfig, "'" + path + "' is not valid JSON");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PolicyPad collaborative session server"};
  unsigned short port = 8080;
  std::string data_dir, seed_file, provider = "mock", config_file, address = "0.0.0.0";
  std::size_t max_inflight = 4;
  app.add_option("--port", port, "Listening port (0 picks a free one)")->capture_default_str();
  app.add_option("--address", address, "Listening address")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Directory for session logs, snapshots and versions");
  app.add_option("--seed-file", seed_file, "Seed used when POST /sessions has an empty body");
  app.add_option("--provider", provider, "LLM provider")->check(CLI::IsMember({"mock", "remote"}))->capture_default_str();
  auto* inflight_opt = app.add_option("--max-inflight-llm", max_inflight, "Concurrent LLM calls")->capture_default_str();
  app.add_option("--config", config_file, "Provider config JSON; overrides environment variables");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto kind = ppad::llm::provider_kind_from_string(provider);
    auto cfg = kind == ppad::llm::ProviderKind::kMock
                   ? ppad::llm::ProviderConfig::mock_defaults()
                   : ppad::llm::ProviderConfig::from_env(kind, ppad::llm::ProviderConfig::process_env());
    if (!config_file.empty()) cfg.merge(read_json_file(config_file));
    if (inflight_opt->count() > 0 || config_file.empty()) cfg.max_inflight = max_inflight;

    std::shared_ptr<ppad::llm::Provider> backend = ppad::llm::make_provider(cfg.provider);
    ppad::llm::LlmGateway gateway(cfg, backend);

    ppad::collab::ServerOptions options;
    options.address = address;
    options.port = port;
    if (!data_dir.empty()) options.data_dir = data_dir;
    if (!seed_file.empty()) options.default_seed = ppad::collab::load_seed_file(seed_file);

    ppad::collab::Server server(options, gateway);
    const auto bound = server.start();
    std::cout << "policypad-server listening on " << address << ":" << bound << " ("
              << server.session_count() << " session(s) restored, provider " << provider << ")" << std::endl;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "policypad-server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
