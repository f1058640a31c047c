// Copyright 2026 The eXmY Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// exmy: analyze, emulate, encode, decode and inspect tensors.
//
// Tensors on disk are headerless little-endian row-major f32 or bf16 values.
// Exit status: 0 ok, 1 internal error, 2 bad input or usage.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "exmy/exmy.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::vector<std::string> inputs;
  std::string output;
  std::vector<std::string> names;
  std::vector<std::string> shapes;
  std::string dtype = "f32";
  std::string format;
  std::string scheme = "max-before";
  std::string block = "tensor";
  std::string scale_type = "f32";
  std::string report = "json";
  std::vector<int> mantissa{1, 2, 3};
  double budget = 0.001;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw exmy::Error(exmy::ErrorCode::kIoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomic(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw exmy::Error(exmy::ErrorCode::kIoError, "cannot write " + path);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw exmy::Error(exmy::ErrorCode::kIoError, "cannot rename onto " + path);
  }
}

void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
  } else {
    write_atomic(o.output, text);
  }
}

exmy::Dims parse_dims(const std::string& text) {
  exmy::Dims dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || v > 0xffffffffUL) {
      throw UsageError("bad --shape '" + text + "'");
    }
    dims.push_back(static_cast<std::uint32_t>(v));
  }
  if (dims.empty()) throw UsageError("bad --shape '" + text + "'");
  return dims;
}

struct Loaded {
  exmy::Dims dims;
  exmy::Tensor2f values;
};

Loaded load_tensor(const Options& o, std::size_t i) {
  const std::vector<std::uint8_t> bytes = read_bytes(o.inputs[i]);
  const std::size_t width = o.dtype == "bf16" ? 2 : 4;
  if (bytes.empty()) throw UsageError(o.inputs[i] + ": empty tensor");
  if (bytes.size() % width != 0) {
    throw exmy::Error(exmy::ErrorCode::kSizeMismatch,
                      o.inputs[i] + ": byte length is not a multiple of " + std::to_string(width));
  }
  const std::uint64_t n = bytes.size() / width;
  Loaded l;
  if (o.shapes.empty()) {
    l.dims = {static_cast<std::uint32_t>(n)};
  } else {
    l.dims = parse_dims(o.shapes.size() == 1 ? o.shapes[0] : o.shapes.at(i));
  }
  if (exmy::element_count(l.dims) != n) {
    throw exmy::Error(exmy::ErrorCode::kSizeMismatch,
                      o.inputs[i] + ": shape holds " + std::to_string(exmy::element_count(l.dims)) +
                          " elements, file holds " + std::to_string(n));
  }
  const exmy::Shape2D s = exmy::view_2d(l.dims);
  l.values.resize(s.rows, s.cols);
  for (std::uint64_t k = 0; k < n; ++k) {
    const std::uint8_t* p = bytes.data() + k * width;
    std::uint32_t bits = width == 2 ? (std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 24)
                                    : std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                          (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    l.values.data()[k] = std::bit_cast<float>(bits);
  }
  return l;
}

std::string f32_bytes(const exmy::Tensor2f& t) {
  std::string out(static_cast<std::size_t>(t.size()) * 4, '\0');
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const std::uint32_t b = std::bit_cast<std::uint32_t>(t.data()[k]);
    for (int j = 0; j < 4; ++j) out[static_cast<std::size_t>(4 * k + j)] = static_cast<char>(b >> (8 * j));
  }
  return out;
}

exmy::BlockConfig block_config(const Options& o) {
  exmy::BlockConfig cfg;
  cfg.scheme = exmy::parse_scheme(o.scheme);
  cfg.shape = exmy::BlockShape::parse(o.block);
  cfg.scale_type = o.scale_type == "bf16" ? exmy::ScaleType::kBfloat16 : exmy::ScaleType::kFloat32;
  return cfg;
}

exmy::FormatSpec format_of(const Options& o) {
  if (o.format.empty()) throw UsageError("--format is required");
  return exmy::FormatSpec::parse(o.format);
}

std::string dims_string(const exmy::Dims& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s;
}

json outcome_json(const exmy::OutcomeCounts& c) {
  return {{"rounded", c.rounded},   {"saturated", c.saturated}, {"subnormal", c.subnormal},
          {"flushed", c.flushed},   {"special", c.special},
          {"flushed_fraction", c.fraction(exmy::Outcome::kFlushed)},
          {"saturated_fraction", c.fraction(exmy::Outcome::kSaturated)}};
}

json analyze_one(const Options& o, const Loaded& l) {
  const exmy::ExponentHistogram h = exmy::histogram(l.values);
  const exmy::ExponentStats st = exmy::stats(h);
  const exmy::Recommendation rec = exmy::recommend_format(h, o.budget, o.mantissa);
  json j;
  j["dims"] = l.dims;
  j["elements"] = h.total;
  j["specials"] = h.specials;
  j["counts"] = h.counts;
  j["stats"] = {{"min_exponent", st.min_exponent},
                {"max_exponent", st.max_exponent},
                {"peak_exponent", st.peak_exponent},
                {"populated_bins", st.populated_bins},
                {"lossless_exponent_bits", st.lossless_exponent_bits}};
  json cov = json::array();
  for (int x = 0; x <= 8; ++x) cov.push_back(st.top_k_coverage[static_cast<std::size_t>((1 << x) - 1)]);
  j["coverage_by_exponent_bits"] = cov;
  json ranked = json::array();
  for (const auto& c : rec.ranked) {
    ranked.push_back({{"format", c.fmt.name()}, {"block", c.hint.name()}, {"proxy_nmse", c.proxy_nmse}});
  }
  j["recommendation"] = {{"budget", o.budget},
                         {"exponent_bits", rec.exponent_bits},
                         {"coverage", rec.coverage},
                         {"candidates", ranked},
                         {"note", rec.note}};
  if (!o.format.empty()) {
    const exmy::BlockConfig cfg = block_config(o);
    const exmy::FlushReport fr = exmy::flush_report(l.values, format_of(o), cfg);
    json blocks = json::array();
    for (const auto& b : fr.blocks) blocks.push_back(b.flushed);
    j["quantization"] = {{"format", format_of(o).name()},
                         {"scheme", exmy::to_string(cfg.scheme)},
                         {"block", cfg.shape.name()},
                         {"total", outcome_json(fr.total)},
                         {"flushed_per_block", blocks}};
  }
  return j;
}

std::string analyze_csv(const json& all) {
  std::ostringstream out;
  out << std::setprecision(17) << "input,section,key,value\n";
  for (const auto& [input, j] : all.items()) {
    const auto& counts = j["counts"];
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (counts[b].get<std::uint64_t>() != 0) out << input << ",counts," << b << "," << counts[b] << "\n";
    }
    out << input << ",summary,elements," << j["elements"] << "\n";
    out << input << ",summary,specials," << j["specials"] << "\n";
    for (const auto& [k, v] : j["stats"].items()) out << input << ",stats," << k << "," << v << "\n";
    const auto& cov = j["coverage_by_exponent_bits"];
    for (std::size_t x = 0; x < cov.size(); ++x) {
      out << input << ",coverage_by_exponent_bits," << x << "," << cov[x].get<double>() << "\n";
    }
    const auto& rec = j["recommendation"];
    out << input << ",recommendation,exponent_bits," << rec["exponent_bits"] << "\n";
    out << input << ",recommendation,coverage," << rec["coverage"].get<double>() << "\n";
    for (const auto& c : rec["candidates"]) {
      out << input << ",candidate," << c["format"].get<std::string>() << "/"
          << c["block"].get<std::string>() << "," << c["proxy_nmse"].get<double>() << "\n";
    }
    if (j.contains("quantization")) {
      for (const auto& [k, v] : j["quantization"]["total"].items()) {
        out << input << ",quantization," << k << "," << v << "\n";
      }
    }
  }
  return out.str();
}

std::string analyze_text(const json& all) {
  std::ostringstream out;
  out << std::setprecision(6);
  for (const auto& [input, j] : all.items()) {
    const auto& st = j["stats"];
    const auto& rec = j["recommendation"];
    out << input << ": " << j["elements"] << " elements, " << j["specials"] << " specials\n"
        << "  exponents " << st["min_exponent"] << ".." << st["max_exponent"] << ", peak "
        << st["peak_exponent"] << ", " << st["populated_bins"] << " distinct, "
        << st["lossless_exponent_bits"] << " bits lossless\n"
        << "  budget " << rec["budget"].get<double>() << ": " << rec["exponent_bits"]
        << " exponent bits, coverage " << rec["coverage"].get<double>() << "\n";
    for (const auto& c : rec["candidates"]) {
      out << "    " << c["format"].get<std::string>() << " " << c["block"].get<std::string>()
          << "  proxy nmse " << c["proxy_nmse"].get<double>() << "\n";
    }
    out << "  note: " << rec["note"].get<std::string>() << "\n";
    if (j.contains("quantization")) {
      const auto& q = j["quantization"];
      const auto& t = q["total"];
      out << "  " << q["format"].get<std::string>() << " " << q["scheme"].get<std::string>() << " "
          << q["block"].get<std::string>() << ": flushed " << t["flushed"] << " ("
          << t["flushed_fraction"].get<double>() << "), saturated " << t["saturated"]
          << ", subnormal " << t["subnormal"] << "\n";
    }
  }
  return out.str();
}

int cmd_analyze(const Options& o) {
  json all = json::object();
  for (std::size_t i = 0; i < o.inputs.size(); ++i) all[o.inputs[i]] = analyze_one(o, load_tensor(o, i));
  if (o.report == "csv") {
    emit(o, analyze_csv(all));
  } else if (o.report == "text") {
    emit(o, analyze_text(all));
  } else {
    emit(o, all.dump(2) + "\n");
  }
  return 0;
}

int cmd_emulate(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("emulate takes exactly one --input");
  if (o.output.empty()) throw UsageError("--output is required");
  const Loaded l = load_tensor(o, 0);
  write_atomic(o.output, f32_bytes(exmy::emulate_tensor(l.values, format_of(o), block_config(o))));
  return 0;
}

std::string tensor_name(const Options& o, std::size_t i) {
  if (i < o.names.size()) return o.names[i];
  return fs::path(o.inputs[i]).stem().string();
}

std::string ratio_string(std::uint64_t fp32_bytes, std::uint64_t bytes) {
  std::ostringstream r;
  r << std::fixed << std::setprecision(3) << (bytes ? static_cast<double>(fp32_bytes) / static_cast<double>(bytes) : 0.0);
  return r.str();
}

int cmd_encode(const Options& o) {
  if (o.output.empty()) throw UsageError("--output is required");
  if (!o.names.empty() && o.names.size() != o.inputs.size()) {
    throw UsageError("give one --name per --input");
  }
  if (o.shapes.size() > 1 && o.shapes.size() != o.inputs.size()) {
    throw UsageError("give one --shape, or one per --input");
  }
  const exmy::FormatSpec fmt = format_of(o);
  const exmy::BlockConfig cfg = block_config(o);
  std::vector<exmy::NamedTensor> tensors;
  std::uint64_t elements = 0;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const Loaded l = load_tensor(o, i);
    elements += exmy::element_count(l.dims);
    tensors.push_back({tensor_name(o, i), exmy::encode_tensor(l.values, l.dims, fmt, cfg)});
  }
  const std::uint64_t size = exmy::write_file(tensors, o.output);
  std::cerr << o.output << ": " << tensors.size() << " tensor(s), " << size << " bytes, ratio vs fp32 "
            << ratio_string(4 * elements, size) << "\n";
  return 0;
}

int cmd_decode(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("decode takes exactly one --input");
  if (o.output.empty()) throw UsageError("--output is required");
  const exmy::ContainerReader reader = exmy::read_file(o.inputs[0]);
  exmy::PackedTensor pt;
  if (!o.names.empty()) {
    pt = reader.read(o.names[0]);
  } else if (reader.entries().size() == 1) {
    pt = reader.read(0);
  } else {
    throw UsageError(o.inputs[0] + " holds " + std::to_string(reader.entries().size()) +
                     " tensors; pick one with --name");
  }
  write_atomic(o.output, f32_bytes(exmy::decode_tensor(pt)));
  return 0;
}

int cmd_info(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("info takes exactly one --input");
  const exmy::ContainerReader reader = exmy::read_file(o.inputs[0]);
  json entries = json::array();
  std::uint64_t elements = 0;
  for (const auto& e : reader.entries()) {
    const std::uint64_t n = exmy::element_count(e.dims);
    elements += n;
    entries.push_back({{"name", e.name},
                       {"dims", e.dims},
                       {"format", e.fmt.name()},
                       {"scheme", exmy::to_string(e.config.scheme)},
                       {"block", e.config.shape.name()},
                       {"scale_type", e.config.scale_type == exmy::ScaleType::kBfloat16 ? "bf16" : "f32"},
                       {"elements", n},
                       {"payload_bytes", e.payload_bytes()},
                       {"fp32_bytes", 4 * n},
                       {"ratio_vs_fp32", std::stod(ratio_string(4 * n, e.payload_bytes()))}});
  }
  const json j = {{"file", o.inputs[0]},
                  {"file_bytes", reader.file_size()},
                  {"ratio_vs_fp32", std::stod(ratio_string(4 * elements, reader.file_size()))},
                  {"tensors", entries}};
  if (o.report == "json") {
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream out;
  if (o.report == "csv") {
    out << "name,dims,format,scheme,block,scale_type,elements,payload_bytes,fp32_bytes,ratio_vs_fp32\n";
    for (const auto& e : entries) {
      out << e["name"].get<std::string>() << ",\"" << dims_string(e["dims"].get<exmy::Dims>()) << "\","
          << e["format"].get<std::string>() << "," << e["scheme"].get<std::string>() << ","
          << e["block"].get<std::string>() << "," << e["scale_type"].get<std::string>() << ","
          << e["elements"] << "," << e["payload_bytes"] << "," << e["fp32_bytes"] << ","
          << e["ratio_vs_fp32"] << "\n";
    }
  } else {
    out << o.inputs[0] << ": " << reader.file_size() << " bytes, " << entries.size()
        << " tensor(s), ratio vs fp32 " << j["ratio_vs_fp32"] << "\n";
    for (const auto& e : entries) {
      out << "  " << e["name"].get<std::string>() << "  [" << dims_string(e["dims"].get<exmy::Dims>())
          << "]  " << e["format"].get<std::string>() << " " << e["scheme"].get<std::string>() << " "
          << e["block"].get<std::string>() << "  " << e["payload_bytes"] << " bytes  x"
          << e["ratio_vs_fp32"] << "\n";
    }
  }
  emit(o, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eXmY tensor quantization, packing and analysis"};
  app.require_subcommand(1);
  Options o;

  auto add_input = [&](CLI::App* c, bool many) {
    auto* opt = c->add_option("-i,--input", o.inputs, "Input file")->required();
    if (!many) opt->expected(1);
  };
  auto add_tensor = [&](CLI::App* c) {
    c->add_option("--shape", o.shapes, "Dimensions R,C[,...]; default: one dimension");
    c->add_option("--dtype", o.dtype, "Element type of raw input")->check(CLI::IsMember({"f32", "bf16"}));
  };
  auto add_quant = [&](CLI::App* c, bool required) {
    auto* f = c->add_option("--format", o.format, "eXmY format, e.g. e3m2");
    if (required) f->required();
    c->add_option("--scheme", o.scheme, "max-before | max-after | float-scale");
    c->add_option("--block", o.block, "tensor | row | col | subrow:L | tile:RxC");
    c->add_option("--scale-type", o.scale_type, "Stored scale type for float-scale")
        ->check(CLI::IsMember({"f32", "bf16"}));
  };

  auto* analyze = app.add_subcommand("analyze", "Exponent histogram, statistics and format advice");
  add_input(analyze, true);
  add_tensor(analyze);
  add_quant(analyze, false);
  analyze->add_option("--budget", o.budget, "Fraction of nonzero elements allowed to flush");
  analyze->add_option("--mantissa", o.mantissa, "Mantissa widths to rank")->delimiter(',');
  analyze->add_option("--report", o.report, "json | csv | text")->check(CLI::IsMember({"json", "csv", "text"}));
  analyze->add_option("-o,--output", o.output, "Report file; default stdout");

  auto* emulate = app.add_subcommand("emulate", "Quantize and dequantize to raw f32");
  add_input(emulate, false);
  add_tensor(emulate);
  add_quant(emulate, true);
  emulate->add_option("-o,--output", o.output, "Raw f32 output")->required();

  auto* encode = app.add_subcommand("encode", "Pack tensors into an EXMY container");
  add_input(encode, true);
  add_tensor(encode);
  add_quant(encode, true);
  encode->add_option("--name", o.names, "Tensor name per input; default: file stem");
  encode->add_option("-o,--output", o.output, "Container path")->required();

  auto* decode = app.add_subcommand("decode", "Unpack one tensor to raw f32");
  add_input(decode, false);
  decode->add_option("--name", o.names, "Tensor to extract")->expected(1);
  decode->add_option("-o,--output", o.output, "Raw f32 output")->required();

  auto* info = app.add_subcommand("info", "List a container's tensors");
  add_input(info, false);
  info->add_option("--report", o.report, "json | csv | text")->check(CLI::IsMember({"json", "csv", "text"}));
  info->add_option("-o,--output", o.output, "Report file; default stdout");
  info->callback([&] {
    if (info->count("--report") == 0) o.report = "text";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*emulate) return cmd_emulate(o);
    if (*encode) return cmd_encode(o);
    if (*decode) return cmd_decode(o);
    if (*info) return cmd_info(o);
  } catch (const UsageError& e) {
    std::cerr << "exmy: " << e.what() << "\n";
    return kExitUsage;
  } catch (const exmy::Error& e) {
    std::cerr << "exmy: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "exmy: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
