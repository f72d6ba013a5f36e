#include "paddy/model_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "paddy/error.hpp"
#include "paddy/text.hpp"

namespace paddy {

namespace {

void put_values(std::ostream& out, std::string_view tag, std::span<const double> v) {
  out << tag;
  for (double x : v) out << ' ' << text::hex(x);
  out << '\n';
}

void write_layer(std::ostream& out, const Layer& l) {
  switch (l.kind()) {
    case LayerKind::dense: {
      const auto& d = static_cast<const DenseLayer&>(l);
      out << "dense " << d.in_width() << ' ' << d.out_width() << ' ' << d.has_bias() << '\n';
      put_values(out, "W", d.weights.flat());
      put_values(out, "b", d.bias);
      break;
    }
    case LayerKind::conv1d: {
      const auto& c = static_cast<const Conv1DLayer&>(l);
      const auto& s = c.shape();
      out << "conv1d " << s.in_channels << ' ' << s.in_length << ' ' << s.filters << ' ' << s.width
          << ' ' << s.stride << ' ' << c.has_bias() << '\n';
      put_values(out, "K", c.kernel);
      put_values(out, "b", c.bias);
      break;
    }
    case LayerKind::batchnorm: {
      const auto& b = static_cast<const BatchNormLayer&>(l);
      out << "batchnorm " << b.channels() << ' ' << b.spatial() << ' ' << text::hex(b.eps()) << ' '
          << text::hex(b.momentum()) << ' ' << b.has_running_stats << '\n';
      put_values(out, "gamma", b.gamma);
      put_values(out, "beta", b.beta);
      put_values(out, "running_mean", b.running_mean);
      put_values(out, "running_var", b.running_var);
      break;
    }
    case LayerKind::activation:
      out << "activation " << to_string(static_cast<const ActivationLayer&>(l).fn()) << ' '
          << l.in_width() << '\n';
      break;
    case LayerKind::dropout:
      out << "dropout " << text::hex(static_cast<const DropoutLayer&>(l).rate()) << ' '
          << l.in_width() << '\n';
      break;
    case LayerKind::softmax:
      out << "softmax " << l.in_width() << '\n';
      break;
  }
}

/// Line-oriented reader that tags every error with the current section.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void enter(std::string section) { section_ = std::move(section); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("corrupted model file " + source_ + " (section '" + section_ + "', line " +
                    std::to_string(line_no_) + "): " + msg);
  }

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!text::trim(line).empty()) {
        std::vector<std::string> tokens;
        std::istringstream ss(line);
        for (std::string t; ss >> t;) tokens.push_back(t);
        return tokens;
      }
    }
    fail("unexpected end of file");
  }

  std::vector<std::string> expect(std::string_view head, std::size_t args) {
    auto t = next();
    if (t.empty() || t[0] != head) fail("expected '" + std::string(head) + "'");
    if (t.size() != args + 1)
      fail("'" + std::string(head) + "' expects " + std::to_string(args) + " fields, found " +
           std::to_string(t.size() - 1));
    return t;
  }

  std::size_t count(const std::string& token) const {
    auto v = text::parse_int<std::size_t>(token);
    if (!v) fail("bad count '" + token + "'");
    return *v;
  }

  double real(const std::string& token) const {
    auto v = text::parse_hex(token);
    if (!v) fail("bad number '" + token + "'");
    return *v;
  }

  void values(std::string_view tag, std::span<double> dst) {
    auto t = expect(tag, dst.size());
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = real(t[i + 1]);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::string section_ = "header";
  std::size_t line_no_ = 0;
};

std::unique_ptr<Layer> read_layer(Reader& r) {
  auto t = r.next();
  if (t.empty()) r.fail("empty layer record");
  const std::string& kind = t[0];
  auto args = [&](std::size_t n) {
    if (t.size() != n + 1) r.fail("'" + kind + "' expects " + std::to_string(n) + " fields");
  };
  try {
    if (kind == "dense") {
      args(3);
      auto d = std::make_unique<DenseLayer>(r.count(t[1]), r.count(t[2]), r.count(t[3]) != 0);
      r.values("W", d->weights.flat());
      r.values("b", d->bias);
      return d;
    }
    if (kind == "conv1d") {
      args(6);
      auto c = std::make_unique<Conv1DLayer>(r.count(t[1]), r.count(t[2]), r.count(t[3]),
                                             r.count(t[4]), r.count(t[5]), r.count(t[6]) != 0);
      r.values("K", c->kernel);
      r.values("b", c->bias);
      return c;
    }
    if (kind == "batchnorm") {
      args(5);
      auto b = std::make_unique<BatchNormLayer>(r.count(t[1]), r.count(t[2]), r.real(t[3]),
                                                r.real(t[4]));
      b->has_running_stats = r.count(t[5]) != 0;
      r.values("gamma", b->gamma);
      r.values("beta", b->beta);
      r.values("running_mean", b->running_mean);
      r.values("running_var", b->running_var);
      return b;
    }
    if (kind == "activation") {
      args(2);
      if (t[1] != "relu" && t[1] != "sigmoid") r.fail("unknown activation '" + t[1] + "'");
      return std::make_unique<ActivationLayer>(
          t[1] == "relu" ? ActivationFn::relu : ActivationFn::sigmoid, r.count(t[2]));
    }
    if (kind == "dropout") {
      args(2);
      return std::make_unique<DropoutLayer>(r.real(t[1]), r.count(t[2]));
    }
    if (kind == "softmax") {
      args(1);
      return std::make_unique<SoftmaxLayer>(r.count(t[1]));
    }
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  r.fail("unknown layer kind '" + kind + "'");
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  const bool is_network = std::holds_alternative<Network>(model.classifier);
  out << "paddy-model " << kModelFormatVersion << '\n';
  out << "type " << (is_network ? "network" : "fastdropout") << '\n';
  out << "section standardizer\n";
  put_values(out, "means", model.standardizer.means);
  put_values(out, "sds", model.standardizer.sds);
  if (is_network) {
    const auto& net = std::get<Network>(model.classifier);
    out << "section network\n";
    out << "layers " << net.size() << '\n';
    for (std::size_t i = 0; i < net.size(); ++i) write_layer(out, net.layer(i));
  } else {
    const auto& fd = std::get<FastDropoutModel>(model.classifier);
    out << "section fastdropout\n";
    out << "features " << fd.feature_width() << '\n';
    out << "keep_prob " << text::hex(fd.keep_prob) << '\n';
    for (std::size_t c = 0; c < kStageCount; ++c) put_values(out, "w", fd.weights.row(c));
    put_values(out, "bias", fd.bias);
  }
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path.string() + "'");
  save_model(out, model);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

TrainedModel load_model(std::istream& in, const std::string& source) {
  Reader r(in, source);
  auto magic = r.expect("paddy-model", 1);
  if (magic[1] != std::to_string(kModelFormatVersion)) r.fail("unsupported version " + magic[1]);
  const auto type = r.expect("type", 1)[1];
  if (type != "network" && type != "fastdropout") r.fail("unknown model type '" + type + "'");

  TrainedModel model;
  r.expect("section", 1);
  r.enter("standardizer");
  r.values("means", model.standardizer.means);
  r.values("sds", model.standardizer.sds);

  auto sec = r.expect("section", 1);
  if (sec[1] != type) r.fail("expected section '" + type + "'");
  r.enter(type);
  if (type == "network") {
    Network net;
    const std::size_t n = r.count(r.expect("layers", 1)[1]);
    for (std::size_t i = 0; i < n; ++i) net.add(read_layer(r));
    try {
      net.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    net.set_mode(Mode::infer);
    model.classifier = std::move(net);
  } else {
    FastDropoutModel fd;
    const std::size_t width = r.count(r.expect("features", 1)[1]);
    fd.keep_prob = r.real(r.expect("keep_prob", 1)[1]);
    if (!(fd.keep_prob > 0.0 && fd.keep_prob <= 1.0)) r.fail("keep_prob outside (0,1]");
    fd.weights = Matrix(kStageCount, width);
    for (std::size_t c = 0; c < kStageCount; ++c) r.values("w", fd.weights.row(c));
    r.values("bias", fd.bias);
    model.classifier = std::move(fd);
  }
  r.enter("end");
  r.expect("end", 0);
  return model;
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path.string() + "'");
  return load_model(in, path.string());
}

}  // namespace paddy
