#include "orthodict/bench.hpp"

#include "orthodict/data.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace orthodict::bench {

using nlohmann::json;

std::filesystem::path meta_path_for(const std::filesystem::path& odm) {
  std::filesystem::path meta = odm;
  meta.replace_extension(".meta.json");
  return meta;
}

void save_dictionary(const std::filesystem::path& odm, const AnyDictionary& dictionary,
                     const DictionaryMeta& meta) {
  std::vector<Matrix> records;
  if (const auto* u = std::get_if<UnionDictionary>(&dictionary)) {
    for (const auto& b : u->blocks()) records.push_back(b.matrix());
  } else {
    records.push_back(std::get<OvercompleteDictionary>(dictionary).atoms());
  }

  std::ofstream data(odm, std::ios::binary);
  if (!data) throw std::runtime_error("cannot write " + odm.string());
  std::ofstream header(meta_path_for(odm));
  if (!header) throw std::runtime_error("cannot write " + meta_path_for(odm).string());

  header << json{{"format", "orthodict-dictionary"},
                 {"version", 1},
                 {"algo", meta.algo},
                 {"p", meta.p},
                 {"size", meta.size},
                 {"records", records.size()},
                 {"s0", meta.s0},
                 {"energy", to_string(meta.energy)}}
                .dump()
         << '\n';
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    header << json{{"record", i},
                   {"offset", offset},
                   {"rows", records[i].rows()},
                   {"cols", records[i].cols()}}
                  .dump()
           << '\n';
    write_matrix(data, records[i]);
    offset += kMatrixHeaderBytes + static_cast<std::uint64_t>(records[i].size()) * 8;
  }
  if (!data || !header) throw std::runtime_error("failed writing " + odm.string());
}

StoredDictionary load_dictionary(const std::filesystem::path& odm) {
  const auto meta_path = meta_path_for(odm);
  std::ifstream header(meta_path);
  if (!header) throw std::runtime_error("cannot open " + meta_path.string());

  std::string line;
  if (!std::getline(header, line)) {
    throw ParseError(meta_path.string() + ": empty dictionary header", 0);
  }
  DictionaryMeta meta;
  std::size_t records = 0;
  try {
    const json head = json::parse(line);
    if (head.at("format") != "orthodict-dictionary") {
      throw ParseError(meta_path.string() + ": not a dictionary header", 0);
    }
    meta.algo = head.at("algo").get<std::string>();
    meta.p = head.at("p").get<Index>();
    meta.size = head.at("size").get<std::size_t>();
    meta.s0 = head.at("s0").get<std::size_t>();
    meta.energy = parse_energy_kind(head.at("energy").get<std::string>());
    records = head.at("records").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what(), 0);
  }

  std::ifstream data(odm, std::ios::binary);
  if (!data) throw std::runtime_error("cannot open " + odm.string());
  std::vector<Matrix> blocks;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < records; ++i) {
    blocks.push_back(read_matrix(data, offset));
    offset += kMatrixHeaderBytes + static_cast<std::size_t>(blocks.back().size()) * 8;
  }
  if (data.peek() != std::char_traits<char>::eof()) {
    throw ParseError(odm.string() + ": trailing bytes after " + std::to_string(records) +
                         " records",
                     offset);
  }

  if (meta.algo == "sbo") {
    UnionDictionary d(meta.p);
    for (auto& b : blocks) d.append(OrthoBlock(std::move(b)));
    if (d.size() != meta.size) throw ParseError(odm.string() + ": block count mismatch", offset);
    return {std::move(d), meta};
  }
  if (meta.algo == "aksvd") {
    if (blocks.size() != 1 || blocks[0].rows() != meta.p ||
        blocks[0].cols() != static_cast<Index>(meta.size)) {
      throw ParseError(odm.string() + ": atom matrix does not match its header", 0);
    }
    return {OvercompleteDictionary(std::move(blocks[0])), meta};
  }
  throw ParseError(meta_path.string() + ": unknown algorithm '" + meta.algo + "'", 0);
}

Matrix encode_codes(const std::vector<std::int64_t>& blocks, const SparseColumns& code) {
  const std::size_t m = code.cols();
  if (blocks.size() != m) throw ContractError("encode_codes: block list length mismatch");
  const auto s = static_cast<Index>(code.per_column);
  Matrix out(1 + 2 * s, static_cast<Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = static_cast<Index>(j);
    out(0, col) = static_cast<double>(blocks[j]);
    const auto idx = code.indices(j);
    const auto val = code.values(j);
    for (Index k = 0; k < s; ++k) {
      const auto i = idx[static_cast<std::size_t>(k)];
      out(1 + k, col) = i == kNoIndex ? -1.0 : static_cast<double>(i);
      out(1 + s + k, col) = val[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

StoredCodes decode_codes(const MatrixView& encoded, Index coefficient_rows) {
  if (encoded.rows() < 1 || encoded.rows() % 2 != 1) {
    throw ContractError("decode_codes: expected 1 + 2s rows, got " +
                        std::to_string(encoded.rows()));
  }
  const Index s = (encoded.rows() - 1) / 2;
  const auto m = static_cast<std::size_t>(encoded.cols());
  StoredCodes out{std::vector<std::int64_t>(m),
                  SparseColumns(coefficient_rows, static_cast<std::size_t>(s), m)};
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = static_cast<Index>(j);
    out.blocks[j] = static_cast<std::int64_t>(encoded(0, col));
    auto idx = out.code.indices(j);
    auto val = out.code.values(j);
    for (Index k = 0; k < s; ++k) {
      const double i = encoded(1 + k, col);
      if (i < 0) continue;
      if (i >= static_cast<double>(coefficient_rows) || i != std::floor(i)) {
        throw ContractError("decode_codes: coefficient row out of range");
      }
      idx[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(i);
      val[static_cast<std::size_t>(k)] = encoded(1 + s + k, col);
    }
  }
  return out;
}

double stored_error(const MatrixView& y, const StoredDictionary& dictionary,
                    const StoredCodes& codes) {
  if (const auto* u = std::get_if<UnionDictionary>(&dictionary.dictionary)) {
    std::vector<Assignment> assignments(codes.blocks.size());
    for (std::size_t j = 0; j < assignments.size(); ++j) {
      if (codes.blocks[j] < 0) throw ContractError("stored codes lack a block index");
      assignments[j].block = static_cast<std::uint32_t>(codes.blocks[j]);
    }
    return frobenius_error(y, *u, assignments, codes.code);
  }
  return frobenius_error(y, std::get<OvercompleteDictionary>(dictionary.dictionary).atoms(),
                         codes.code);
}

}  // namespace orthodict::bench
