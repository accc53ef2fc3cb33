#include "dysflm/checkpoint.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>

#include "dysflm/errors.hpp"

namespace dysflm {

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'S', 'F', 'L', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
void write_f32(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
float read_f32(std::istream& in) {
  float v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::string read_string(std::istream& in) {
  std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

void write_array(std::ostream& out, const std::string& name, const Mat& m) {
  write_string(out, name);
  write_u32(out, 2);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_f32(out, m(i, j));
}

void write_array(std::ostream& out, const std::string& name, const Vec& v) {
  write_string(out, name);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f32(out, v(i));
}

struct NamedArray {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Mat as_mat() const {
    if (shape.size() != 2) throw DataError("checkpoint: array is not 2-d");
    Mat m(shape[0], shape[1]);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = data[k++];
    return m;
  }
  Vec as_vec() const {
    if (shape.size() != 1) throw DataError("checkpoint: array is not 1-d");
    Vec v(shape[0]);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = data[static_cast<std::size_t>(i)];
    return v;
  }
};

}  // namespace

void save_checkpoint(const FusedModel<float>& model, const std::string& path) {
  std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + tmp);

  out.write(kMagic, 8);
  write_u32(out, kVersion);
  const LMConfig& c = model.lm.config;
  write_u32(out, static_cast<std::uint32_t>(c.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(c.d_model));
  write_u32(out, static_cast<std::uint32_t>(c.n_layers));
  write_u32(out, static_cast<std::uint32_t>(c.n_heads));
  write_u32(out, static_cast<std::uint32_t>(c.d_ff));
  write_u32(out, static_cast<std::uint32_t>(c.max_seq_len));
  write_u64(out, c.seed);
  write_string(out, std::string(schema_name(model.schema)));

  write_u32(out, model.lm.use_lora ? 1 : 0);
  if (model.lm.use_lora) {
    write_u32(out, static_cast<std::uint32_t>(model.lm.lora_q[0].rank));
    write_f32(out, model.lm.lora_q[0].alpha);
    write_f32(out, model.lm.lora_q[0].dropout_p);
  }
  write_u32(out, static_cast<std::uint32_t>(model.projector.feature_dim()));
  write_u32(out, static_cast<std::uint32_t>(model.projector.hidden_dim()));
  write_f32(out, model.projector.dropout_p);

  write_u32(out, static_cast<std::uint32_t>(model.vocab.size()));
  for (const auto& t : model.vocab.all_tokens()) write_string(out, t);

  std::uint32_t n_arrays = 0;
  auto count_pos = out.tellp();
  write_u32(out, 0);  // patched below

  auto emit_mat = [&](const std::string& name, const Mat& m) {
    write_array(out, name, m);
    ++n_arrays;
  };
  auto emit_vec = [&](const std::string& name, const Vec& v) {
    write_array(out, name, v);
    ++n_arrays;
  };

  emit_mat("base/tok_emb", model.lm.tok_emb);
  emit_mat("base/pos_emb", model.lm.pos_emb);
  for (int l = 0; l < c.n_layers; ++l) {
    const auto& layer = model.lm.layers[static_cast<std::size_t>(l)];
    std::string p = "base/layer" + std::to_string(l) + "/";
    emit_vec(p + "ln1_g", layer.ln1_g);
    emit_vec(p + "ln1_b", layer.ln1_b);
    emit_vec(p + "ln2_g", layer.ln2_g);
    emit_vec(p + "ln2_b", layer.ln2_b);
    emit_mat(p + "wq", layer.wq);
    emit_mat(p + "wk", layer.wk);
    emit_mat(p + "wv", layer.wv);
    emit_mat(p + "wo", layer.wo);
    emit_mat(p + "w1", layer.w1);
    emit_vec(p + "b1", layer.b1);
    emit_mat(p + "w2", layer.w2);
    emit_vec(p + "b2", layer.b2);
  }
  emit_vec("base/lnf_g", model.lm.lnf_g);
  emit_vec("base/lnf_b", model.lm.lnf_b);
  emit_mat("base/head_w", model.lm.head_w);
  emit_vec("base/head_b", model.lm.head_b);
  if (model.lm.use_lora) {
    for (int l = 0; l < c.n_layers; ++l) {
      std::string p = "lora/layer" + std::to_string(l) + "/";
      emit_mat(p + "q_a", model.lm.lora_q[static_cast<std::size_t>(l)].A);
      emit_mat(p + "q_b", model.lm.lora_q[static_cast<std::size_t>(l)].B);
      emit_mat(p + "v_a", model.lm.lora_v[static_cast<std::size_t>(l)].A);
      emit_mat(p + "v_b", model.lm.lora_v[static_cast<std::size_t>(l)].B);
    }
  }
  emit_mat("proj/w1", model.projector.w1);
  emit_vec("proj/b1", model.projector.b1);
  emit_mat("proj/w2", model.projector.w2);
  emit_vec("proj/b2", model.projector.b2);

  out.seekp(count_pos);
  write_u32(out, n_arrays);
  out.close();
  std::filesystem::rename(tmp, path);
}

FusedModel<float> load_checkpoint(const std::string& path,
                                  bool include_adapters) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kMagic, 8))
    throw DataError("checkpoint: bad magic in " + path);
  std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")");

  LMConfig cfg;
  cfg.vocab_size = static_cast<int>(read_u32(in));
  cfg.d_model = static_cast<int>(read_u32(in));
  cfg.n_layers = static_cast<int>(read_u32(in));
  cfg.n_heads = static_cast<int>(read_u32(in));
  cfg.d_ff = static_cast<int>(read_u32(in));
  cfg.max_seq_len = static_cast<int>(read_u32(in));
  cfg.seed = read_u64(in);
  Schema schema = parse_schema(read_string(in));

  std::uint32_t has_lora = read_u32(in);
  int lora_rank = 0;
  float lora_alpha = 16.0f, lora_dropout = 0.1f;
  if (has_lora) {
    lora_rank = static_cast<int>(read_u32(in));
    lora_alpha = read_f32(in);
    lora_dropout = read_f32(in);
  }
  int feat_dim = static_cast<int>(read_u32(in));
  int hidden_dim = static_cast<int>(read_u32(in));
  float proj_dropout = read_f32(in);

  std::uint32_t vocab_n = read_u32(in);
  Vocab vocab;
  for (std::uint32_t i = 0; i < vocab_n; ++i) {
    std::string tok = read_string(in);
    if (i < static_cast<std::uint32_t>(vocab.size())) {
      if (vocab.token(static_cast<int>(i)) != tok)
        throw DataError("checkpoint: reserved token mismatch at id " +
                        std::to_string(i));
    } else {
      vocab.add(tok);
    }
  }
  if (vocab.size() != cfg.vocab_size)
    throw DataError("checkpoint: vocab size mismatch");

  std::uint32_t n_arrays = read_u32(in);
  std::map<std::string, NamedArray> arrays;
  for (std::uint32_t k = 0; k < n_arrays; ++k) {
    std::string name = read_string(in);
    std::uint32_t ndim = read_u32(in);
    NamedArray arr;
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      arr.shape.push_back(read_u32(in));
      total *= arr.shape.back();
    }
    arr.data.resize(total);
    for (auto& v : arr.data) v = read_f32(in);
    arrays[name] = std::move(arr);
  }
  if (!in) throw DataError("checkpoint: truncated file " + path);

  auto mat = [&](const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw DataError("checkpoint: missing array " + name);
    return it->second.as_mat();
  };
  auto vecv = [&](const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw DataError("checkpoint: missing array " + name);
    return it->second.as_vec();
  };

  FusedModel<float> model{TransformerLM<float>(cfg),
                          init_projector<float>(feat_dim, hidden_dim,
                                                cfg.d_model, cfg.seed,
                                                proj_dropout),
                          vocab, schema};
  model.lm.tok_emb = mat("base/tok_emb");
  model.lm.pos_emb = mat("base/pos_emb");
  for (int l = 0; l < cfg.n_layers; ++l) {
    auto& layer = model.lm.layers[static_cast<std::size_t>(l)];
    std::string p = "base/layer" + std::to_string(l) + "/";
    layer.ln1_g = vecv(p + "ln1_g");
    layer.ln1_b = vecv(p + "ln1_b");
    layer.ln2_g = vecv(p + "ln2_g");
    layer.ln2_b = vecv(p + "ln2_b");
    layer.wq = mat(p + "wq");
    layer.wk = mat(p + "wk");
    layer.wv = mat(p + "wv");
    layer.wo = mat(p + "wo");
    layer.w1 = mat(p + "w1");
    layer.b1 = vecv(p + "b1");
    layer.w2 = mat(p + "w2");
    layer.b2 = vecv(p + "b2");
  }
  model.lm.lnf_g = vecv("base/lnf_g");
  model.lm.lnf_b = vecv("base/lnf_b");
  model.lm.head_w = mat("base/head_w");
  model.lm.head_b = vecv("base/head_b");

  if (has_lora && include_adapters) {
    model.lm.attach_lora(lora_rank, lora_alpha, lora_dropout, cfg.seed);
    for (int l = 0; l < cfg.n_layers; ++l) {
      std::string p = "lora/layer" + std::to_string(l) + "/";
      model.lm.lora_q[static_cast<std::size_t>(l)].A = mat(p + "q_a");
      model.lm.lora_q[static_cast<std::size_t>(l)].B = mat(p + "q_b");
      model.lm.lora_v[static_cast<std::size_t>(l)].A = mat(p + "v_a");
      model.lm.lora_v[static_cast<std::size_t>(l)].B = mat(p + "v_b");
    }
  }
  model.projector.w1 = mat("proj/w1");
  model.projector.b1 = vecv("proj/b1");
  model.projector.w2 = mat("proj/w2");
  model.projector.b2 = vecv("proj/b2");
  return model;
}

}  // namespace dysflm
