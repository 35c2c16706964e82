#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cain::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // I/O and anything unclassified
  kValidation = 2,
  kData = 3,
  kNumeric = 4,
};

struct MakeDataArgs {
  std::string out;
  int identities = 4;
  int frames = 12;
  int resolution = 64;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::string> resume;
};

struct GenerateArgs {
  std::string checkpoint;
  std::vector<std::string> sources;
  std::string target_landmarks;
  std::string out;
};

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::vector<int> K{1, 8};
  int samples_per_sequence = 4;
  std::uint64_t seed = 0;
  std::optional<std::string> face_net;
};

struct AblateArgs {
  std::string variant;
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::string> baseline;  // checkpoint of the full model; trained when absent
  std::optional<std::string> face_net;
  int samples_per_sequence = 4;
};

void make_data(const MakeDataArgs& args, std::ostream& log);
void train(const TrainArgs& args, std::ostream& log);
void generate(const GenerateArgs& args, std::ostream& log);
void evaluate(const EvaluateArgs& args, std::ostream& log);
void ablate(const AblateArgs& args, std::ostream& log);

/// Parses argv, runs the subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cain::cli
