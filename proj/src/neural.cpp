#include "padfall/neural.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace padfall {

std::vector<int> MlpSpec::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(output_dim);
  return dims;
}

std::size_t MlpSpec::parameter_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) n += static_cast<std::size_t>(dims[i + 1]) * (dims[i] + 1);
  return n;
}

void MlpSpec::validate() const {
  for (int d : layer_dims()) {
    if (d < 1) throw ConfigError("network dimensions must all be >= 1");
  }
}

MlpSpec actor_spec(int obs_dim, int action_dim, std::vector<int> hidden) {
  return {obs_dim, std::move(hidden), action_dim, OutputActivation::kTanh};
}

MlpSpec critic_spec(int obs_dim, int action_dim, std::vector<int> hidden) {
  return {obs_dim + action_dim, std::move(hidden), 1, OutputActivation::kLinear};
}

ParamSet init_params(const MlpSpec& spec, RngStream& rng) {
  spec.validate();
  ParamSet p = ParamSet::zeros_like(spec);
  for (auto& l : p.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        l.weight(r, c) = static_cast<float>(rng.uniform(-bound, bound));
  }
  return p;
}

AdamState AdamState::for_params(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = params;
  s.v = params;
  for (auto* set : {&s.m, &s.v}) {
    for (auto& l : set->layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }
  return s;
}

namespace {

template <typename Derived, typename GDerived, typename MDerived, typename VDerived>
void adam_block(Eigen::MatrixBase<Derived>& p, const Eigen::MatrixBase<GDerived>& g, Eigen::MatrixBase<MDerived>& m,
                Eigen::MatrixBase<VDerived>& v, float b1, float b2, float step_size, float eps_hat) {
  m = b1 * m + (1.0f - b1) * g;
  v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
  p.array() -= step_size * m.array() / (v.array().sqrt() + eps_hat);
}

}  // namespace

void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state, double learning_rate) {
  if (params.layers.size() != grads.layers.size() || params.layers.size() != state.m.layers.size()) {
    throw UsageError("adam_update: shape mismatch");
  }
  const AdamConfig& c = state.config;
  const double lr = learning_rate > 0.0 ? learning_rate : c.learning_rate;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  // p -= lr * (m / bc1) / (sqrt(v / bc2) + eps), rearranged onto the raw moments.
  const auto step_size = static_cast<float>(lr * std::sqrt(bc2) / bc1);
  const auto eps_hat = static_cast<float>(c.epsilon * std::sqrt(bc2));
  const auto b1 = static_cast<float>(c.beta1);
  const auto b2 = static_cast<float>(c.beta2);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& pl = params.layers[i];
    const auto& gl = grads.layers[i];
    auto& ml = state.m.layers[i];
    auto& vl = state.v.layers[i];
    if (pl.weight.rows() != gl.weight.rows() || pl.weight.cols() != gl.weight.cols() ||
        pl.bias.size() != gl.bias.size()) {
      throw UsageError("adam_update: layer shape mismatch");
    }
    adam_block(pl.weight, gl.weight, ml.weight, vl.weight, b1, b2, step_size, eps_hat);
    adam_block(pl.bias, gl.bias, ml.bias, vl.bias, b1, b2, step_size, eps_hat);
  }
  ++params.version;
}

void soft_update(ParamSet& target, const ParamSet& source, double tau) {
  if (target.layers.size() != source.layers.size()) throw UsageError("soft_update: shape mismatch");
  const auto t = static_cast<float>(tau);
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& tl = target.layers[i];
    const auto& sl = source.layers[i];
    if (tau == 1.0) {
      tl = sl;
      continue;
    }
    tl.weight = t * sl.weight + (1.0f - t) * tl.weight;
    tl.bias = t * sl.bias + (1.0f - t) * tl.bias;
  }
  ++target.version;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ConfigError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const MlpSpec& spec, const ParamSet& params) {
  check_shapes(params, spec);
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(spec.output_dim));
  put_u32(out, static_cast<std::uint32_t>(spec.hidden_dims.size()));
  for (int h : spec.hidden_dims) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(spec.output_activation));
  params.for_each([&](float v) { put_f32(out, v); });
  return out;
}

std::pair<MlpSpec, ParamSet> decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.raw(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw ConfigError("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) throw ConfigError(fmt::format("unsupported checkpoint version {}", version));
  MlpSpec spec;
  spec.input_dim = static_cast<int>(in.u32());
  spec.output_dim = static_cast<int>(in.u32());
  const std::uint32_t hidden = in.u32();
  if (hidden > 64) throw ConfigError("checkpoint declares an implausible layer count");
  spec.hidden_dims.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) spec.hidden_dims.push_back(static_cast<int>(in.u32()));
  const std::uint32_t act = in.u32();
  if (act > 1) throw ConfigError("checkpoint has unknown output activation");
  spec.output_activation = static_cast<OutputActivation>(act);
  for (int d : spec.layer_dims()) {
    if (d < 1 || d > (1 << 20)) throw ConfigError("checkpoint declares invalid layer dimensions");
  }
  ParamSet params = ParamSet::zeros_like(spec);
  params.for_each([&](float& v) { v = in.f32(); });
  if (!in.done()) throw ConfigError("checkpoint has trailing bytes");
  return {spec, std::move(params)};
}

void save_checkpoint(const std::string& path, const MlpSpec& spec, const ParamSet& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError(fmt::format("cannot write checkpoint {}", path));
  const std::string bytes = encode_checkpoint(spec, params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::pair<MlpSpec, ParamSet> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(fmt::format("cannot read checkpoint {}", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace padfall
