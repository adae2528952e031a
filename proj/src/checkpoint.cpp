#include "pde_embed/checkpoint.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "pde_embed/util.hpp"

namespace pde_embed {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "pde-embed checkpoint";

const char* strategy_name(MultiplierStrategy::Kind k) {
  switch (k) {
    case MultiplierStrategy::Kind::Fixed: return "fixed";
    case MultiplierStrategy::Kind::Step: return "step";
    case MultiplierStrategy::Kind::Ascent: return "ascent";
  }
  return "fixed";
}

MultiplierStrategy::Kind strategy_from_name(const std::string& s) {
  if (s == "fixed") return MultiplierStrategy::Kind::Fixed;
  if (s == "step") return MultiplierStrategy::Kind::Step;
  if (s == "ascent") return MultiplierStrategy::Kind::Ascent;
  throw CheckpointError(CheckpointError::Kind::CorruptFile,
                        "unknown multiplier strategy '" + s + "'");
}

[[noreturn]] void corrupt(const std::string& what) {
  throw CheckpointError(CheckpointError::Kind::CorruptFile, what);
}

// Every double in the file rides in one binary payload so the round trip is
// bitwise; the header holds only shapes, counts, and names.
std::vector<double> payload_doubles(const Checkpoint& c) {
  std::vector<double> p;
  for (const auto& e : c.bank.nets) {
    p.insert(p.end(), e.params.in_scale.begin(), e.params.in_scale.end());
    p.insert(p.end(), e.params.in_shift.begin(), e.params.in_shift.end());
    p.insert(p.end(), e.params.out_scale.begin(), e.params.out_scale.end());
    p.insert(p.end(), e.params.out_shift.begin(), e.params.out_shift.end());
    p.insert(p.end(), e.params.flat.begin(), e.params.flat.end());
  }
  const MultiplierState& m = c.multipliers;
  p.push_back(m.lambda_r);
  p.push_back(m.lambda_k);
  p.push_back(m.strategy.s_r);
  p.push_back(m.strategy.s_k);
  p.push_back(m.strategy.alpha);
  for (const auto& h : m.history) {
    p.push_back(h[0]);
    p.push_back(h[1]);
  }
  p.push_back(c.final_terms.l_r);
  p.push_back(c.final_terms.l_ic);
  p.push_back(c.final_terms.l_bc);
  p.push_back(c.final_terms.l_data);
  p.push_back(c.final_terms.l_k);
  if (c.adam) {
    p.push_back(c.adam->lr);
    p.push_back(c.adam->beta1);
    p.push_back(c.adam->beta2);
    p.push_back(c.adam->eps);
    for (const auto& v : c.adam->m) p.insert(p.end(), v.begin(), v.end());
    for (const auto& v : c.adam->v) p.insert(p.end(), v.begin(), v.end());
  }
  return p;
}

class PayloadReader {
public:
  explicit PayloadReader(std::vector<double> d) : d_(std::move(d)) {}

  double next() {
    if (pos_ >= d_.size()) corrupt("payload shorter than the header promises");
    return d_[pos_++];
  }
  std::vector<double> take(std::size_t n) {
    if (pos_ + n > d_.size()) corrupt("payload shorter than the header promises");
    std::vector<double> out(d_.begin() + long(pos_), d_.begin() + long(pos_ + n));
    pos_ += n;
    return out;
  }
  bool exhausted() const { return pos_ == d_.size(); }

private:
  std::vector<double> d_;
  std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json hdr;
  hdr["version"] = c.version;
  hdr["seed"] = c.seed;
  hdr["problem"] = c.problem;
  hdr["epochs"] = c.epochs;
  hdr["multiplier_strategy"] = strategy_name(c.multipliers.strategy.kind);
  hdr["multiplier_iteration"] = c.multipliers.iteration;
  hdr["history_len"] = c.multipliers.history.size();
  hdr["adam"] = c.adam.has_value();
  if (c.adam) hdr["adam_t"] = c.adam->t;
  json nets = json::array();
  for (const auto& e : c.bank.nets) {
    e.params.validate();
    nets.push_back({{"name", e.name},
                    {"role", to_string(e.role)},
                    {"input_dim", e.params.spec.input_dim},
                    {"hidden_layers", e.params.spec.hidden_layers},
                    {"hidden_width", e.params.spec.hidden_width},
                    {"output_dim", e.params.spec.output_dim},
                    {"activation", to_string(e.params.spec.activation)}});
  }
  hdr["nets"] = nets;

  const std::vector<double> doubles = payload_doubles(c);
  const std::vector<uint8_t> bytes = doubles_to_bytes(doubles);

  std::ostringstream out;
  out << kMagic << ' ' << c.version << '\n';
  out << hdr.dump() << '\n';
  out << "payload " << base64_encode(bytes) << '\n';
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx", (unsigned long long)fnv1a64(bytes));
  out << "checksum " << sum << '\n';
  atomic_write_file(path, out.str());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(CheckpointError::Kind::IoError, e.what());
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) corrupt("empty file");
  const std::string magic(kMagic);
  if (line.rfind(magic, 0) != 0) corrupt("not a checkpoint file");
  {
    int v = -1;
    if (std::sscanf(line.c_str() + magic.size(), " %d", &v) != 1) corrupt("missing version");
    if (v != kCheckpointVersion)
      throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                            "checkpoint version " + std::to_string(v) + ", expected " +
                                std::to_string(kCheckpointVersion));
  }

  json hdr;
  if (!std::getline(in, line)) corrupt("missing header");
  try {
    hdr = json::parse(line);
  } catch (const json::exception& e) {
    corrupt(std::string("bad header: ") + e.what());
  }

  std::string payload_b64, checksum_hex;
  if (!std::getline(in, line) || line.rfind("payload ", 0) != 0) corrupt("missing payload");
  payload_b64 = line.substr(8);
  if (!std::getline(in, line) || line.rfind("checksum ", 0) != 0) corrupt("missing checksum");
  checksum_hex = line.substr(9);

  std::vector<uint8_t> bytes;
  try {
    bytes = base64_decode(payload_b64);
  } catch (const std::invalid_argument& e) {
    corrupt(std::string("bad payload: ") + e.what());
  }
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx", (unsigned long long)fnv1a64(bytes));
  if (checksum_hex != sum) corrupt("checksum mismatch");
  if (bytes.size() % 8 != 0) corrupt("payload length not a multiple of 8");

  Checkpoint c;
  try {
    c.version = hdr.at("version").get<int>();
    c.seed = hdr.at("seed").get<std::uint64_t>();
    c.problem = hdr.at("problem").get<std::string>();
    c.epochs = hdr.at("epochs").get<long>();
    c.multipliers.strategy.kind = strategy_from_name(hdr.at("multiplier_strategy"));
    c.multipliers.iteration = hdr.at("multiplier_iteration").get<long>();

    PayloadReader rd(bytes_to_doubles(bytes));
    for (const auto& jn : hdr.at("nets")) {
      NetworkEntry e;
      e.name = jn.at("name").get<std::string>();
      e.role = network_role_from_string(jn.at("role"));
      MlpSpec ms;
      ms.input_dim = jn.at("input_dim").get<int>();
      ms.hidden_layers = jn.at("hidden_layers").get<int>();
      ms.hidden_width = jn.at("hidden_width").get<int>();
      ms.output_dim = jn.at("output_dim").get<int>();
      ms.activation = activation_from_string(jn.at("activation"));
      ms.validate();
      e.params.spec = ms;
      e.params.in_scale = rd.take(std::size_t(ms.input_dim));
      e.params.in_shift = rd.take(std::size_t(ms.input_dim));
      e.params.out_scale = rd.take(std::size_t(ms.output_dim));
      e.params.out_shift = rd.take(std::size_t(ms.output_dim));
      e.params.flat = rd.take(ms.parameter_count());
      c.bank.add(std::move(e));
    }
    c.multipliers.lambda_r = rd.next();
    c.multipliers.lambda_k = rd.next();
    c.multipliers.strategy.s_r = rd.next();
    c.multipliers.strategy.s_k = rd.next();
    c.multipliers.strategy.alpha = rd.next();
    const auto hist_len = hdr.at("history_len").get<std::size_t>();
    c.multipliers.history.reserve(hist_len);
    for (std::size_t i = 0; i < hist_len; ++i) {
      const double a = rd.next(), b = rd.next();
      c.multipliers.history.push_back({a, b});
    }
    c.final_terms.l_r = rd.next();
    c.final_terms.l_ic = rd.next();
    c.final_terms.l_bc = rd.next();
    c.final_terms.l_data = rd.next();
    c.final_terms.l_k = rd.next();
    if (hdr.at("adam").get<bool>()) {
      AdamState st;
      st.t = hdr.at("adam_t").get<long>();
      st.lr = rd.next();
      st.beta1 = rd.next();
      st.beta2 = rd.next();
      st.eps = rd.next();
      for (const auto& e : c.bank.nets) st.m.push_back(rd.take(e.params.flat.size()));
      for (const auto& e : c.bank.nets) st.v.push_back(rd.take(e.params.flat.size()));
      c.adam = std::move(st);
    }
    if (!rd.exhausted()) corrupt("payload longer than the header promises");
  } catch (const json::exception& e) {
    corrupt(std::string("bad header: ") + e.what());
  } catch (const MlpError& e) {
    corrupt(std::string("bad network spec: ") + e.what());
  } catch (const ActivationError& e) {
    corrupt(std::string("bad activation: ") + e.what());
  }
  return c;
}

namespace {

const NetworkEntry* match_source(const Checkpoint& ckpt, const NetworkEntry& tgt) {
  for (const auto& s : ckpt.bank.nets)
    if (s.role == tgt.role && s.name == tgt.name) return &s;
  const NetworkEntry* only = nullptr;
  for (const auto& s : ckpt.bank.nets) {
    if (s.role != tgt.role) continue;
    if (only) return nullptr; // ambiguous
    only = &s;
  }
  return only;
}

} // namespace

NetworkBank transfer_init(const Checkpoint& ckpt, NetworkBank target, TransferMode mode,
                          TransferReport* report) {
  for (auto& tgt : target.nets) {
    const NetworkEntry* src = match_source(ckpt, tgt);
    if (!src) {
      if (mode == TransferMode::Strict)
        throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                              "no source network for '" + tgt.name + "'");
      if (report) report->notes.push_back(tgt.name + ": no source network, fresh initialization");
      continue;
    }
    if (mode == TransferMode::Strict) {
      if (!(src->params.spec == tgt.params.spec))
        throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                              "layer structure of '" + tgt.name + "' differs from '" + src->name +
                                  "'");
      tgt.params = src->params; // normalization maps transfer too
      if (report) report->notes.push_back(tgt.name + ": all layers copied from " + src->name);
      continue;
    }
    // Partial: positional copy of shape-matching affine layers; everything
    // else, the normalization maps included, keeps the target's fresh state.
    const int n = std::min(src->params.spec.affine_count(), tgt.params.spec.affine_count());
    int copied = 0;
    for (int l = 0; l < n; ++l) {
      if (src->params.spec.fan_in(l) != tgt.params.spec.fan_in(l) ||
          src->params.spec.fan_out(l) != tgt.params.spec.fan_out(l))
        continue;
      const std::size_t nw =
          std::size_t(src->params.spec.fan_in(l)) * std::size_t(src->params.spec.fan_out(l));
      std::copy_n(src->params.flat.begin() + long(src->params.w_offset(l)), nw,
                  tgt.params.flat.begin() + long(tgt.params.w_offset(l)));
      std::copy_n(src->params.flat.begin() + long(src->params.b_offset(l)),
                  std::size_t(src->params.spec.fan_out(l)),
                  tgt.params.flat.begin() + long(tgt.params.b_offset(l)));
      ++copied;
    }
    if (report)
      report->notes.push_back(tgt.name + ": " + std::to_string(copied) + " of " +
                              std::to_string(tgt.params.spec.affine_count()) +
                              " layers copied from " + src->name +
                              ", normalization maps recomputed");
  }
  return target;
}

} // namespace pde_embed
