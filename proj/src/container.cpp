#include "csc/container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "csc/errors.hpp"

namespace csc {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

const Array& Container::array(const std::string& name) const {
    const auto it = arrays.find(name);
    if (it == arrays.end()) throw DataError("container has no array '" + name + "'");
    return it->second;
}

const std::string& Container::get(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw DataError("container has no metadata key '" + key + "'");
    return it->second;
}

namespace {

class Writer {
public:
    template <class T>
    void pod(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        out.insert(out.end(), p, p + sizeof(T));
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
    template <class T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string str() {
        const auto len = pod<std::uint32_t>();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += len;
        return s;
    }
    void need(std::size_t n) const {
        if (bytes.size() - pos < n) throw DataError("truncated container");
    }
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t to_size(const std::string& s) {
    try {
        return static_cast<std::size_t>(std::stoull(s));
    } catch (const std::exception&) {
        throw DataError("malformed integer in container metadata: " + s);
    }
}

double to_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw DataError("malformed number in container metadata: " + s);
    }
}

Array vec(std::vector<double> values) {
    Array a;
    a.shape = {values.size()};
    a.values = std::move(values);
    return a;
}

}  // namespace

std::vector<std::uint8_t> serialize(const Container& c) {
    Writer w;
    w.out.insert(w.out.end(), kContainerMagic, kContainerMagic + 8);
    w.pod(kContainerVersion);
    w.pod(static_cast<std::uint32_t>(c.kind));
    w.pod(static_cast<std::uint32_t>(c.meta.size()));
    for (const auto& [k, v] : c.meta) {
        w.str(k);
        w.str(v);
    }
    w.pod(static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& [name, a] : c.arrays) {
        std::uint64_t count = 1;
        for (auto d : a.shape) count *= d;
        if (count != a.values.size()) throw UsageError("array '" + name + "' shape does not match payload");
        w.str(name);
        w.pod(static_cast<std::uint32_t>(a.shape.size()));
        for (auto d : a.shape) w.pod(d);
        for (double v : a.values) w.pod(v);
    }
    return std::move(w.out);
}

Container deserialize(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    r.need(8);
    if (std::memcmp(bytes.data(), kContainerMagic, 8) != 0) throw DataError("not a toolkit container");
    r.pos = 8;
    const auto version = r.pod<std::uint32_t>();
    if (version != kContainerVersion) {
        throw DataError("unsupported container version " + std::to_string(version));
    }
    Container c;
    const auto kind = r.pod<std::uint32_t>();
    if (kind < 1 || kind > 4) throw DataError("unknown container kind");
    c.kind = static_cast<ContainerKind>(kind);
    const auto n_meta = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = r.str();
        c.meta[std::move(k)] = r.str();
    }
    const auto n_arrays = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        std::string name = r.str();
        Array a;
        const auto ndim = r.pod<std::uint32_t>();
        std::uint64_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            a.shape.push_back(r.pod<std::uint64_t>());
            count *= a.shape.back();
        }
        r.need(count * sizeof(double));
        a.values.resize(count);
        std::memcpy(a.values.data(), bytes.data() + r.pos, count * sizeof(double));
        r.pos += count * sizeof(double);
        c.arrays[std::move(name)] = std::move(a);
    }
    if (r.pos != bytes.size()) throw DataError("trailing bytes after container payload");
    return c;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open for writing: " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_container(const std::filesystem::path& path, const Container& c) {
    write_file_atomic(path, serialize(c));
}

Container read_container(const std::filesystem::path& path) { return deserialize(read_file(path)); }

bool is_container(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    char head[8] = {};
    f.read(head, 8);
    return f.gcount() == 8 && std::memcmp(head, kContainerMagic, 8) == 0;
}

Container to_container(const Image& img, std::map<std::string, std::string> meta) {
    Container c;
    c.kind = ContainerKind::image;
    c.meta = std::move(meta);
    c.arrays["image"] = Array{{img.height(), img.width()}, img.storage()};
    return c;
}

Image image_from(const Container& c) {
    if (c.kind != ContainerKind::image && c.kind != ContainerKind::report) {
        throw DataError("container does not hold an image");
    }
    const Array& a = c.array(c.kind == ContainerKind::image ? "image" : "estimate");
    if (a.shape.size() != 2) throw DataError("image array must be 2D");
    return Image(a.shape[0], a.shape[1], a.values);
}

Container to_container(const LocalDictionary& dict) {
    Container c;
    c.kind = ContainerKind::dictionary;
    c.meta["rows"] = std::to_string(dict.rows());
    c.meta["cols"] = std::to_string(dict.cols());
    c.meta["num_atoms"] = std::to_string(dict.num_atoms());
    c.meta["provenance"] = dict.provenance();
    c.arrays["atoms"] = Array{{dict.num_atoms(), dict.signal_dim()}, dict.atoms()};
    return c;
}

LocalDictionary dictionary_from(const Container& c) {
    if (c.kind != ContainerKind::dictionary) throw DataError("container does not hold a dictionary");
    return LocalDictionary::raw(to_size(c.get("rows")), to_size(c.get("cols")),
                                to_size(c.get("num_atoms")), c.array("atoms").values,
                                c.get("provenance"));
}

Container to_container(const TrainState& state, const TrainConfig& cfg) {
    const CscNetParams& p = state.params;
    Container c;
    c.kind = ContainerKind::checkpoint;
    c.meta["num_maps"] = std::to_string(p.num_maps);
    c.meta["filter_side"] = std::to_string(p.filter_side);
    c.meta["stride"] = std::to_string(p.stride);
    c.meta["unroll"] = std::to_string(p.unroll);
    c.meta["epochs_done"] = std::to_string(state.epochs_done);
    c.meta["adam_step"] = std::to_string(state.adam.step);
    c.meta["train.lr"] = num(cfg.lr);
    c.meta["train.lr_decay"] = num(cfg.lr_decay);
    c.meta["train.decay_every"] = std::to_string(cfg.decay_every);
    c.meta["train.adam_eps"] = num(cfg.adam_eps);
    c.meta["train.adam_beta1"] = num(cfg.adam_betas[0]);
    c.meta["train.adam_beta2"] = num(cfg.adam_betas[1]);
    c.meta["train.epochs"] = std::to_string(cfg.epochs);
    c.meta["train.steps_per_epoch"] = std::to_string(cfg.steps_per_epoch);
    c.meta["train.crop_size"] = std::to_string(cfg.crop_size);
    c.meta["train.batch"] = std::to_string(cfg.batch);
    c.meta["train.sigma"] = num(cfg.sigma);
    c.meta["train.seed"] = std::to_string(cfg.seed);
    c.meta["train.tau_clamp"] = "non-negative after every update";
    c.arrays["filters_a"] = vec(p.filters_a);
    c.arrays["filters_b"] = vec(p.filters_b);
    c.arrays["filters_c"] = vec(p.filters_c);
    c.arrays["tau"] = vec(p.tau);
    c.arrays["inv_c"] = vec({p.inv_c});
    c.arrays["loss_history"] = vec(state.loss_history);
    c.arrays["lr_history"] = vec(state.lr_history);
    const auto put_adam = [&](const std::string& prefix, const Gradients& g) {
        c.arrays[prefix + ".filters_a"] = vec(g.filters_a);
        c.arrays[prefix + ".filters_b"] = vec(g.filters_b);
        c.arrays[prefix + ".filters_c"] = vec(g.filters_c);
        c.arrays[prefix + ".tau"] = vec(g.tau);
        c.arrays[prefix + ".inv_c"] = vec({g.inv_c});
    };
    put_adam("adam_m", state.adam.first);
    put_adam("adam_v", state.adam.second);
    return c;
}

TrainState train_state_from(const Container& c) {
    if (c.kind != ContainerKind::checkpoint) throw DataError("container does not hold a checkpoint");
    TrainState st;
    CscNetParams& p = st.params;
    p.num_maps = to_size(c.get("num_maps"));
    p.filter_side = to_size(c.get("filter_side"));
    p.stride = to_size(c.get("stride"));
    p.unroll = to_size(c.get("unroll"));
    p.filters_a = c.array("filters_a").values;
    p.filters_b = c.array("filters_b").values;
    p.filters_c = c.array("filters_c").values;
    p.tau = c.array("tau").values;
    p.inv_c = c.array("inv_c").values.at(0);
    try {
        p.validate();
    } catch (const UsageError& e) {
        throw DataError(std::string("invalid checkpoint: ") + e.what());
    }
    st.epochs_done = to_size(c.get("epochs_done"));
    st.loss_history = c.array("loss_history").values;
    st.lr_history = c.array("lr_history").values;
    st.adam.step = to_size(c.get("adam_step"));
    const auto get_adam = [&](const std::string& prefix, Gradients& g) {
        g.filters_a = c.array(prefix + ".filters_a").values;
        g.filters_b = c.array(prefix + ".filters_b").values;
        g.filters_c = c.array(prefix + ".filters_c").values;
        g.tau = c.array(prefix + ".tau").values;
        g.inv_c = c.array(prefix + ".inv_c").values.at(0);
    };
    get_adam("adam_m", st.adam.first);
    get_adam("adam_v", st.adam.second);
    return st;
}

TrainConfig train_config_from(const Container& c) {
    TrainConfig cfg;
    cfg.lr = to_double(c.get("train.lr"));
    cfg.lr_decay = to_double(c.get("train.lr_decay"));
    cfg.decay_every = to_size(c.get("train.decay_every"));
    cfg.adam_eps = to_double(c.get("train.adam_eps"));
    cfg.adam_betas = {to_double(c.get("train.adam_beta1")), to_double(c.get("train.adam_beta2"))};
    cfg.epochs = to_size(c.get("train.epochs"));
    cfg.steps_per_epoch = to_size(c.get("train.steps_per_epoch"));
    cfg.crop_size = to_size(c.get("train.crop_size"));
    cfg.batch = to_size(c.get("train.batch"));
    cfg.sigma = to_double(c.get("train.sigma"));
    cfg.seed = static_cast<std::uint64_t>(std::stoull(c.get("train.seed")));
    return cfg;
}

}  // namespace csc
