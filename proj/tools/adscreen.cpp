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

// Command-line front end: serve, chat, simulate, train, eval, features.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "adscreen/config.hpp"
#include "adscreen/error.hpp"
#include "adscreen/server.hpp"
#include "adscreen/signal_features.hpp"
#include "adscreen/simulator.hpp"
#include "adscreen/training.hpp"

namespace {

using namespace adscreen;
using namespace std::chrono_literals;

ServiceConfig read_config(const std::string& path) {
  return load_service_config(path.empty() ? std::filesystem::path(ADSCREEN_DEFAULT_CONFIG) : std::filesystem::path(path));
}

// Blocks SIGINT/SIGTERM in every thread started afterwards so the main
// thread can wait for them synchronously.
sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int cmd_serve(const std::string& config_path, int port) {
  ServiceConfig cfg = read_config(config_path);
  if (port >= 0) cfg.port = port;
  const ServiceResources res = load_service_resources(cfg);
  const sigset_t set = block_shutdown_signals();
  MedicalLogWriter log(cfg.medical_log);
  Server server(res, log, static_cast<std::uint16_t>(cfg.port));
  server.start(std::max(2u, std::thread::hardware_concurrency()));
  spdlog::info("listening on 127.0.0.1:{} (medical log {})", server.port(), cfg.medical_log.string());
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("shutting down");
  server.stop();
  log.flush();
  return 0;
}

void print_server_message(const ServerMessage& m) {
  std::visit(
      [](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, WelcomeMsg>) {
          std::cout << "[session " << msg.session_id << ", silence threshold " << msg.silence_threshold_s
                    << " s]\n";
        } else if constexpr (std::is_same_v<T, ResponseMsg>) {
          std::cout << "robot: " << msg.text << "  (" << response_type_name(msg.response_type) << ")\n";
        } else if constexpr (std::is_same_v<T, SilenceWatchMsg>) {
          std::cout << "[waiting; prompt at t=" << msg.deadline_s << " s]\n";
        } else if constexpr (std::is_same_v<T, DiagnosisMsg>) {
          std::cout << "[block " << msg.block_index << ": " << degree_name(msg.final)
                    << (msg.tie_broken ? ", tie broken" : "") << "]\n";
        } else {
          std::cout << "[error " << msg.code << ": " << msg.message << "]\n";
        }
      },
      m);
  std::cout.flush();
}

int cmd_chat(const std::string& config_path, const std::string& host, int port) {
  std::optional<ServiceResources> res;
  std::optional<MedicalLogWriter> log;
  std::optional<Server> server;
  std::uint16_t target = static_cast<std::uint16_t>(port);
  if (port < 0) {
    const ServiceConfig cfg = read_config(config_path);
    res.emplace(load_service_resources(cfg));
    log.emplace(cfg.medical_log);
    server.emplace(*res, *log, 0);
    server->start(2);
    target = server->port();
  }
  LineClient client(host, target);
  client.send(HelloMsg{"terminal"});
  std::atomic<bool> done{false};
  std::thread reader([&] {
    while (!done) {
      try {
        if (auto m = client.receive(200ms)) print_server_message(*m);
      } catch (const Error& e) {
        std::cerr << e.what() << '\n';
      }
    }
  });
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line == "/quit") break;
    if (line.empty()) continue;
    client.send(UtteranceMsg{line, std::nullopt, std::nullopt, std::nullopt});
  }
  client.send(ByeMsg{});
  std::this_thread::sleep_for(500ms);  // let the final diagnosis arrive
  done = true;
  reader.join();
  if (server) server->stop();
  return 0;
}

int cmd_simulate(const std::string& profiles, std::size_t n, std::uint64_t seed, const std::string& out,
                 bool audio, std::size_t pairs) {
  GenerateOptions opt;
  opt.pseudo_audio = audio;
  opt.n_pairs = pairs;
  const auto rows = generate_corpus(load_profiles(profiles), n, seed, out, opt);
  std::cout << "wrote " << rows.size() << " sessions to " << out << '\n';
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& corpus, const std::string& which,
              int epochs, std::uint64_t seed, const std::string& out) {
  std::vector<TrainTarget> targets;
  if (which == "all") {
    targets = {TrainTarget::kAudio, TrainTarget::kLanguage, TrainTarget::kDisfluency,
               TrainTarget::kInteractivity, TrainTarget::kDialogueAct};
  } else {
    targets = {parse_train_target(which)};
  }
  const ServiceConfig cfg = read_config(config_path);
  ServiceConfig base = cfg;
  base.models_dir.clear();
  const ServiceResources res = load_service_resources(base);
  const auto scripted = load_corpus(corpus);
  spdlog::info("replaying {} sessions", scripted.size());
  const auto replayed = replay_corpus(scripted, res.listener, res.session_options());

  TrainingSettings settings;
  settings.bigru.epochs = epochs;
  settings.bigru.seed = seed;
  // Models in the output directory are updated one target at a time so the
  // shared vocabulary stays fixed.
  ModelBundle bundle = std::filesystem::exists(std::filesystem::path(out) / "vocab.txt")
                           ? load_bundle(out)
                           : ModelBundle{initial_models(replayed, settings), std::nullopt};
  for (TrainTarget t : targets) {
    train_target(t, bundle, scripted, replayed, res.session_options(), cfg.silence_threshold_s, settings);
  }
  save_bundle(bundle, out);
  std::cout << "models saved to " << out << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& corpus, const std::string& models,
             const std::string& report) {
  ServiceConfig cfg = read_config(config_path);
  cfg.models_dir.clear();
  const ServiceResources res = load_service_resources(cfg);
  const ExperimentReport r = run_experiment(corpus, models, report, res.listener, res.session_options());
  std::cout << r.to_json().dump(2) << '\n';
  return 0;
}

int cmd_features(const std::string& wav, const std::string& out) {
  const AudioBuffer audio = load_wav(wav);
  const AcousticAnalysis a = extract_acoustic_vector(audio);
  nlohmann::ordered_json j;
  j["sample_rate"] = audio.sample_rate;
  j["duration_s"] = audio.duration_s();
  j["summary"] = a.summary.values;
  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (const auto& s : acoustic_segments(audio)) segments.push_back(s.values);
  j["segments"] = segments;
  nlohmann::ordered_json pauses = nlohmann::ordered_json::array();
  for (const TimeSpan& p : detect_pauses(a, 0.25)) pauses.push_back({p.start_s, p.end_s});
  j["pauses"] = pauses;
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out);
  f << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue-based dementia screening service and tools"};
  app.require_subcommand(1);
  app.fallthrough();  // --config may follow the subcommand
  std::string config;
  app.add_option("--config", config, "Service configuration file (JSON)");

  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the dialogue service");
  serve->add_option("--port", port, "TCP port (0 picks a free one)");

  std::string host = "127.0.0.1";
  auto* chat = app.add_subcommand("chat", "Talk to the robot from the terminal");
  chat->add_option("--host", host, "Server host when --port is given");
  chat->add_option("--port", port, "Connect to a running server instead of starting one");

  std::string profiles, out, corpus, models, report, which, wav;
  std::size_t sessions = 50, pairs = kPairsPerBlock;
  std::uint64_t seed = 42;
  int epochs = 30;
  bool audio = false;
  auto* simulate = app.add_subcommand("simulate", "Generate a labeled synthetic corpus");
  simulate->add_option("--profiles", profiles, "Profile file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--sessions", sessions, "Sessions per profile");
  simulate->add_option("--seed", seed, "Corpus seed");
  simulate->add_option("--pairs", pairs, "User turns per session");
  simulate->add_flag("--audio", audio, "Attach tone-based pseudo-audio");
  simulate->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train classifiers on a corpus");
  train->add_option("--corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--classifier", which, "audio|language|disfluency|interactivity|dialogue_act|all")
      ->required();
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--out", out, "Model directory")->required();

  auto* eval = app.add_subcommand("eval", "Score trained models on a corpus");
  eval->add_option("--corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--models", models, "Model directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--report", report, "Report path (JSON)")->required();

  auto* features = app.add_subcommand("features", "Acoustic features of a WAV file");
  features->add_option("--wav", wav, "Input WAV")->required()->check(CLI::ExistingFile);
  features->add_option("--out", out, "Output JSON")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*serve) return cmd_serve(config, port);
    if (*chat) return cmd_chat(config, host, port);
    if (*simulate) return cmd_simulate(profiles, sessions, seed, out, audio, pairs);
    if (*train) return cmd_train(config, corpus, which, epochs, seed, out);
    if (*eval) return cmd_eval(config, corpus, models, report);
    if (*features) return cmd_features(wav, out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
