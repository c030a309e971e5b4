// switchminer command-line front end.
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "switchminer/config.hpp"
#include "switchminer/error.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/prompts.hpp"
#include "switchminer/pipeline.hpp"
#include "switchminer/review_service.hpp"

namespace sm = switchminer;
namespace pl = switchminer::pipeline;

namespace {

// Bearer token for the review service; read from the environment only.
constexpr const char* kReviewTokenEnv = "SWITCHMINER_REVIEW_TOKEN";

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string stages = "all";
};

pl::PipelineConfig effective_config(const GlobalOptions& g) {
  pl::PipelineConfig c = g.config.empty() ? pl::PipelineConfig{} : pl::load_pipeline_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output_dir = g.out;
  return c;
}

int run_stages(const GlobalOptions& g, const std::vector<pl::Stage>& stages) {
  const auto config = effective_config(g);
  const auto report = pl::run_pipeline(config, stages, &std::cerr);
  for (const auto& s : report.stages) {
    std::cout << pl::to_string(s.stage) << '\t' << (s.skipped ? "skipped" : "ran") << '\t' << s.outputs.size()
              << " outputs\n";
  }
  std::cout << "manifest\t" << (config.output_dir / pl::artifacts::kManifest).string() << '\n';
  std::cout << "digest\t" << pl::manifest_digest(report.manifest) << '\n';
  return report.exit_status;
}

sm::review::ReviewServer* g_server = nullptr;

void handle_stop(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine contraceptive switches, their extraction and reasons from clinical records"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--stages", g.stages, "Stages for 'run': comma-separated names or 'all'");

  struct StageCommand {
    const char* name;
    pl::Stage stage;
    const char* help;
  };
  const std::vector<StageCommand> commands = {
      {"generate", pl::Stage::Generate, "Generate or import the corpus"},
      {"detect", pl::Stage::Detect, "Filter orders, detect switches and summarize the cohort"},
      {"evaluate-prompts", pl::Stage::EvaluatePrompts, "Score the six prompts on the dev split"},
      {"extract", pl::Stage::Extract, "Extract switch information from test notes with the best prompt"},
      {"baselines", pl::Stage::Baselines, "Train and evaluate the classical baselines"},
      {"topics", pl::Stage::Topics, "Cluster switching reasons into topics"},
      {"enrich", pl::Stage::Enrich, "Score topic enrichment per subgroup"},
      {"report", pl::Stage::Report, "Render charts and tables into <out>/report"},
  };
  std::optional<pl::Stage> chosen;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->callback([&chosen, stage = c.stage] { chosen = stage; });
  }

  auto* run = app.add_subcommand("run", "Run the stages chosen with --stages, in pipeline order");

  auto* show = app.add_subcommand("show-config", "Print the effective configuration");

  std::string fixture_dir;
  auto* fixtures = app.add_subcommand("export-fixtures", "Write the built-in lexicon and prompt fixtures for editing");
  fixtures->add_option("dir", fixture_dir, "Destination directory")->required();

  std::string host = "127.0.0.1";
  int port = 8765;
  std::string store;
  std::string origin = "http://localhost:5173";
  auto* serve = app.add_subcommand("serve-review", "Serve dev-split extractions for clinical review over HTTP");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Bind port")->check(CLI::Range(0, 65535));
  serve->add_option("--store", store, "Session store directory (default <out>/review)");
  serve->add_option("--allowed-origin", origin, "CORS origin of the review UI");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (chosen) return run_stages(g, {*chosen});
    if (run->parsed()) return run_stages(g, pl::parse_stage_list(g.stages));
    if (show->parsed()) {
      std::cout << sm::dump_json(pl::to_json(effective_config(g)), 2) << '\n';
      return 0;
    }
    if (fixtures->parsed()) {
      const std::filesystem::path dir = fixture_dir;
      sm::write_text_file(dir / "lexicon.tsv", std::string(sm::switching::ModalityLexicon::builtin_text()));
      for (const auto& spec : sm::extraction::builtin_prompts()) {
        sm::write_text_file(dir / "prompts" / ("prompt_" + std::to_string(spec.prompt_id) + ".txt"),
                            sm::extraction::format_prompt_fixture(spec));
      }
      return 0;
    }
    if (serve->parsed()) {
      const auto config = effective_config(g);
      const std::filesystem::path store_dir = store.empty() ? config.output_dir / "review" : std::filesystem::path(store);
      sm::review::ReviewService service(config.output_dir, store_dir);
      sm::review::ServerOptions options;
      options.allowed_origin = origin;
      if (const char* token = std::getenv(kReviewTokenEnv)) options.token = token;
      sm::review::ReviewServer server(service, options);
      g_server = &server;
      std::signal(SIGINT, handle_stop);
      std::signal(SIGTERM, handle_stop);
      std::cerr << "serving " << config.output_dir.string() << " on http://" << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot bind " << host << ':' << port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const sm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
