#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "locml/cli.hpp"
#include "locml/version.hpp"

namespace {

void print_usage() {
  std::fprintf(stderr, "usage: locml <subcommand> [--config FILE] [--seed N] [--out DIR]\n"
                       "             [--repeat N] [--format csv|json] [key=value ...]\n"
                       "subcommands:");
  for (const auto& name : locml::subcommand_names()) std::fprintf(stderr, " %s", name.c_str());
  std::fprintf(stderr, "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"locml benchmark harness"};
  app.set_version_flag("--version", std::string("locml ") + locml::version);
  app.allow_extras();

  std::string config_path;
  std::string out_dir;
  std::string format;
  std::string seed;
  std::string repeat;
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed, "seed override");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--repeat", repeat, "timing repetitions (median, one warm-up discarded)");
  app.add_option("--format", format, "payload format")->check(CLI::IsMember({"csv", "json"}));

  std::vector<std::string> positionals;
  app.add_option("args", positionals, "subcommand followed by key=value overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    print_usage();
    return 2;
  }

  if (positionals.empty()) {
    print_usage();
    return 2;
  }

  locml::RunConfig config;
  try {
    if (!config_path.empty()) config = locml::RunConfig::from_file(config_path);
    config.subcommand = positionals.front();
    for (std::size_t i = 1; i < positionals.size(); ++i) {
      const auto& arg = positionals[i];
      const auto eq = arg.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "expected key=value override, got '%s'\n", arg.c_str());
        print_usage();
        return 2;
      }
      config.set(arg.substr(0, eq), arg.substr(eq + 1));
    }
    if (!seed.empty()) config.set("seed", seed);
    if (!out_dir.empty()) config.set("out", out_dir);
    if (!repeat.empty()) config.set("repeat", repeat);
    if (!format.empty()) config.set("format", format);

    if (!locml::run_subcommand(config)) {
      std::fprintf(stderr, "unknown subcommand: %s\n", config.subcommand.c_str());
      print_usage();
      return 2;
    }
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["subcommand"] = config.subcommand;
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
