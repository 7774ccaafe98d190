#pragma once

#include "orthodict/baseline.hpp"
#include "orthodict/linalg.hpp"
#include "orthodict/sbo.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace orthodict::bench {

/// Exit codes of the command-line driver.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // I/O and other runtime errors
  kUsage = 2,        // invalid flags, configuration or input dimensions
  kNumerical = 3,    // decomposition failure
};

struct DictionaryMeta {
  std::string algo;          // "sbo" or "aksvd"
  Index p = 0;
  std::size_t size = 0;      // K blocks or n atoms
  std::size_t s0 = 0;
  EnergyKind energy = EnergyKind::squared_sum;
};

using AnyDictionary = std::variant<UnionDictionary, OvercompleteDictionary>;

struct StoredDictionary {
  AnyDictionary dictionary;
  DictionaryMeta meta;
};

/// dict.odm -> dict.meta.json
std::filesystem::path meta_path_for(const std::filesystem::path& odm);

/// Writes the blocks (or the single atom matrix) as consecutive ODM1 records
/// and a JSON-lines header: one line describing the dictionary, then one line
/// per record with its byte offset and shape.
void save_dictionary(const std::filesystem::path& odm, const AnyDictionary& dictionary,
                     const DictionaryMeta& meta);
StoredDictionary load_dictionary(const std::filesystem::path& odm);

/// Codes are stored as one ODM1 matrix with 1 + 2 s rows per signal column:
/// the block index (-1 for overcomplete codes), s coefficient rows (-1 when a
/// slot is unused), then the s coefficient values.
struct StoredCodes {
  std::vector<std::int64_t> blocks;
  SparseColumns code;
};

Matrix encode_codes(const std::vector<std::int64_t>& blocks, const SparseColumns& code);
StoredCodes decode_codes(const MatrixView& encoded, Index coefficient_rows);

/// ‖Y − D X‖_F from a dictionary and codes as they exist on disk.
double stored_error(const MatrixView& y, const StoredDictionary& dictionary,
                    const StoredCodes& codes);

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace orthodict::bench
