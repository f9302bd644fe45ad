#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bethegeom/report.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bethegeom::IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bethegeom::IoError("cannot open output file: " + path);
  out << body;
  if (!out) throw bethegeom::IoError("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale verification chain: XXZ Bethe algebra, vertex "
               "function eigenvalues, QQ-systems and difference opers, and "
               "the trigonometric Ruijsenaars-Schneider duality."};
  app.name("bethegeom");

  std::string command;
  app.add_option("command", command,
                 "One of: spectrum, bethe, vertex, qq, oper, trs, verify-all")
      ->required();
  std::string configPath;
  app.add_option("--config", configPath, "Path to a JSON config document")
      ->required();
  std::uint64_t seed = 0;
  CLI::Option* seedOpt =
      app.add_option("--seed", seed, "Override the config seed");
  std::string outPath;
  app.add_option("--out", outPath, "Write the report here instead of stdout");
  std::string format;
  app.add_option("--format", format, "Report format: json or csv");
  std::string precision;
  app.add_option("--precision", precision, "Arithmetic mode: std or extended");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    bethegeom::cli::CliOverrides over;
    if (seedOpt->count() > 0) {
      over.has_seed = true;
      over.seed = seed;
    }
    over.out = outPath;
    over.format = format;
    over.precision = precision;

    std::string text = read_file(configPath);
    bethegeom::cli::RunConfig cfg =
        bethegeom::cli::validate_config(text, command, over);
    bethegeom::cli::Report report = bethegeom::cli::run(cfg);
    std::string body = (cfg.format == "csv")
                           ? bethegeom::cli::emit_csv(report)
                           : bethegeom::cli::emit_json(report);
    write_output(cfg.out, body);
    return bethegeom::cli::failed_count(report) > 0 ? 1 : 0;
  } catch (const bethegeom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
