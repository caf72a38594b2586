#include "theta/net/network.hpp"

#include <charconv>
#include <sstream>

#include "theta/core/error.hpp"

namespace theta::net {

void NetworkSpec::validate() const {
  if (in_channels <= 0 || input_size <= 0 || stem_channels <= 0 || stem_stride <= 0) {
    throw ArgumentError("network sizes must be positive");
  }
  if (stem_kernel <= 0 || stem_kernel % 2 == 0) throw ArgumentError("stem kernel must be odd and positive");
  for (const auto& b : blocks) {
    if (b.expansion <= 0 || b.stride <= 0 || b.out_channels <= 0) {
      throw ArgumentError("block expansion, stride and channels must be positive");
    }
  }
}

std::string NetworkSpec::encode() const {
  std::ostringstream s;
  s << "in=" << in_channels << ";size=" << input_size << ";stem=" << stem_channels << '/' << stem_kernel << '/'
    << stem_stride << ";blocks=";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) s << ',';
    s << blocks[i].expansion << '/' << blocks[i].stride << '/' << blocks[i].out_channels;
  }
  return s.str();
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw FormatError("bad network spec '" + std::string(whole) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::array<int, 3> triple(std::string_view s, std::string_view whole) {
  const auto parts = split(s, '/');
  if (parts.size() != 3) throw FormatError("bad network spec '" + std::string(whole) + "'");
  return {parse_int(parts[0], whole), parse_int(parts[1], whole), parse_int(parts[2], whole)};
}

}  // namespace

NetworkSpec NetworkSpec::decode(std::string_view text) {
  const auto fields = split(text, ';');
  if (fields.size() != 4) throw FormatError("bad network spec '" + std::string(text) + "'");
  auto value = [&](std::string_view field, std::string_view key) {
    if (field.substr(0, key.size()) != key || field.size() <= key.size() || field[key.size()] != '=') {
      throw FormatError("bad network spec '" + std::string(text) + "'");
    }
    return field.substr(key.size() + 1);
  };
  NetworkSpec spec;
  spec.in_channels = parse_int(value(fields[0], "in"), text);
  spec.input_size = parse_int(value(fields[1], "size"), text);
  const auto stem = triple(value(fields[2], "stem"), text);
  spec.stem_channels = stem[0];
  spec.stem_kernel = stem[1];
  spec.stem_stride = stem[2];
  spec.blocks.clear();
  const auto blocks = value(fields[3], "blocks");
  if (!blocks.empty()) {
    for (auto b : split(blocks, ',')) {
      const auto t = triple(b, text);
      spec.blocks.push_back({t[0], t[1], t[2]});
    }
  }
  try {
    spec.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  }
  return spec;
}

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  stages_.push_back({"stem", conv_bn_act<T>(spec_.in_channels, spec_.stem_channels, spec_.stem_kernel, spec_.stem_stride)});
  int channels = spec_.stem_channels;
  for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
    const auto& b = spec_.blocks[i];
    stages_.push_back({"block" + std::to_string(i),
                       std::make_unique<InvertedResidual<T>>(channels, b.expansion, b.stride, b.out_channels)});
    channels = b.out_channels;
  }
  stages_.push_back({"pool", std::make_unique<GlobalAvgPool<T>>(), false});
  stages_.push_back({"head", std::make_unique<Linear<T>>(channels, kLogitCount)});
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed) {
  Rng rng = derive_rng(seed, "net.init");
  for (auto& s : stages_) s.layer->initialize(rng);
}

template <typename T>
void Network<T>::set_trainable_tail(int k) {
  if (k < 0) {
    first_trainable_ = 0;
    return;
  }
  if (k == 0) {
    first_trainable_ = stages_.size();
    return;
  }
  int seen = 0;
  first_trainable_ = 0;
  for (std::size_t i = stages_.size(); i-- > 0;) {
    if (stages_[i].has_params && ++seen == k) {
      first_trainable_ = i;
      break;
    }
  }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, bool train) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[0] < 1 || s[1] != spec_.in_channels || s[2] != spec_.input_size ||
      s[3] != spec_.input_size) {
    throw ShapeError("network input: expected (B, " + std::to_string(spec_.in_channels) + ", " +
                     std::to_string(spec_.input_size) + ", " + std::to_string(spec_.input_size) + "), got " +
                     shape_string(s));
  }
  Tensor<T> h = stages_.front().layer->forward(x, train && first_trainable_ == 0);
  for (std::size_t i = 1; i < stages_.size(); ++i) {
    h = stages_[i].layer->forward(std::move(h), train && i >= first_trainable_);
  }
  trained_forward_ = train && first_trainable_ < stages_.size();
  return h;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& dlogits, bool need_input_grad) {
  if (!trained_forward_) throw StateError("network backward called without a training forward pass");
  trained_forward_ = false;
  if (need_input_grad && first_trainable_ != 0) {
    throw StateError("input gradient requested through frozen stages");
  }
  const std::size_t last = stages_.size() - 1;
  Tensor<T> g = stages_[last].layer->backward(dlogits, last > first_trainable_ || need_input_grad);
  for (std::size_t i = last; i-- > first_trainable_;) {
    g = stages_[i].layer->backward(g, i > first_trainable_ || need_input_grad);
  }
  return need_input_grad ? g : Tensor<T>{};
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters(bool trainable_only) {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = trainable_only ? first_trainable_ : 0; i < stages_.size(); ++i) {
    stages_[i].layer->collect_params(stages_[i].name + ".", out);
  }
  return out;
}

template <typename T>
std::vector<StateRef<T>> Network<T>::state() {
  std::vector<StateRef<T>> out;
  for (auto& s : stages_) s.layer->collect_state(s.name + ".", out);
  return out;
}

template <typename T>
std::size_t Network<T>::state_value_count() {
  std::size_t n = 0;
  for (const auto& s : state()) n += s.value->size();
  return n;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::snapshot() {
  std::vector<Tensor<T>> out;
  for (const auto& s : state()) out.push_back(*s.value);
  return out;
}

template <typename T>
void Network<T>::restore(const std::vector<Tensor<T>>& values) {
  auto st = state();
  if (values.size() != st.size()) throw ShapeError("snapshot entry count does not match the network");
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (values[i].shape() != st[i].value->shape()) {
      throw ShapeError(st[i].name + ": snapshot shape " + shape_string(values[i].shape()) + " vs " +
                       shape_string(st[i].value->shape()));
    }
  }
  for (std::size_t i = 0; i < st.size(); ++i) *st[i].value = values[i];
}

template class Network<float>;
template class Network<double>;

}  // namespace theta::net
