#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "internal.hpp"

namespace mhnt::learn {

namespace {

constexpr char kMagic[4] = {'M', 'H', 'N', 'T'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint64_t kMaxVectorLen = 1u << 28;  // sanity cap for corrupt files

void put_u8(std::string& out, std::uint8_t v) { out.push_back(char(v)); }

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_i32(std::string& out, std::int32_t v) {
    put_u32(out, std::uint32_t(v));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_string(std::string& out, const std::string& s) {
    put_u32(out, std::uint32_t(s.size()));
    out += s;
}

void put_f64_vec(std::string& out, const std::vector<double>& v) {
    put_u32(out, std::uint32_t(v.size()));
    for (double x : v)
        put_f64(out, x);
}

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    void need(std::size_t n) const {
        if (std::size_t(end - p) < n)
            throw CorruptError("model file truncated");
    }
    std::uint8_t u8() {
        need(1);
        return *p++;
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = std::uint16_t(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    std::int32_t i32() { return std::int32_t(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        std::uint32_t len = u32();
        if (len > kMaxVectorLen)
            throw CorruptError("model file string length out of range");
        need(len);
        std::string s(reinterpret_cast<const char*>(p), len);
        p += len;
        return s;
    }
    std::vector<double> f64_vec() {
        std::uint32_t len = u32();
        if (len > kMaxVectorLen)
            throw CorruptError("model file vector length out of range");
        std::vector<double> v(len);
        for (auto& x : v)
            x = f64();
        return v;
    }
};

void put_tree(std::string& out, const TreeParams& t) {
    put_u32(out, std::uint32_t(t.nodes.size()));
    for (const TreeNode& n : t.nodes) {
        put_i32(out, n.feature);
        put_f64(out, n.threshold);
        put_i32(out, n.left);
        put_i32(out, n.right);
        put_f64_vec(out, n.probs);
    }
}

TreeParams read_tree(Reader& r) {
    std::uint32_t count = r.u32();
    if (count == 0 || count > kMaxVectorLen)
        throw CorruptError("model file tree node count out of range");
    TreeParams t;
    t.nodes.resize(count);
    for (TreeNode& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.probs = r.f64_vec();
        if (!n.leaf() &&
            (n.left < 0 || n.right < 0 || std::uint32_t(n.left) >= count ||
             std::uint32_t(n.right) >= count))
            throw CorruptError("model file tree child index out of range");
    }
    return t;
}

void put_reg_tree(std::string& out, const RegTree& t) {
    put_u32(out, std::uint32_t(t.nodes.size()));
    for (const RegNode& n : t.nodes) {
        put_i32(out, n.feature);
        put_f64(out, n.threshold);
        put_i32(out, n.left);
        put_i32(out, n.right);
        put_f64(out, n.value);
    }
}

RegTree read_reg_tree(Reader& r) {
    std::uint32_t count = r.u32();
    if (count == 0 || count > kMaxVectorLen)
        throw CorruptError("model file tree node count out of range");
    RegTree t;
    t.nodes.resize(count);
    for (RegNode& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.value = r.f64();
        if (n.feature >= 0 &&
            (n.left < 0 || n.right < 0 || std::uint32_t(n.left) >= count ||
             std::uint32_t(n.right) >= count))
            throw CorruptError("model file tree child index out of range");
    }
    return t;
}

}  // namespace

void save_model(const TrainedModel& m, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kFormatVersion);
    put_u8(out, std::uint8_t(m.kind));
    put_u8(out, std::uint8_t(m.mode));
    put_u32(out, std::uint32_t(m.class_names.size()));
    for (const auto& name : m.class_names)
        put_string(out, name);
    put_u64(out, m.train_seed);
    put_f64_vec(out, m.scaler_mean);
    put_f64_vec(out, m.scaler_std);
    put_f64(out, m.final_loss);
    put_f64_vec(out, m.loss_history);

    switch (m.kind) {
        case ModelKind::Dt:
            put_tree(out, std::get<TreeParams>(m.params));
            break;
        case ModelKind::Rf: {
            const auto& p = std::get<ForestParams>(m.params);
            put_u32(out, std::uint32_t(p.trees.size()));
            for (const TreeParams& t : p.trees)
                put_tree(out, t);
            break;
        }
        case ModelKind::Svm: {
            const auto& p = std::get<SvmParams>(m.params);
            put_u32(out, std::uint32_t(p.weights.size()));
            for (const auto& w : p.weights)
                put_f64_vec(out, w);
            put_f64_vec(out, p.bias);
            break;
        }
        case ModelKind::Nb: {
            const auto& p = std::get<NbParams>(m.params);
            put_u32(out, std::uint32_t(p.prior.size()));
            for (std::size_t c = 0; c < p.prior.size(); ++c) {
                put_f64_vec(out, p.mean[c]);
                put_f64_vec(out, p.var[c]);
            }
            put_f64_vec(out, p.prior);
            break;
        }
        case ModelKind::Mlp: {
            const auto& p = std::get<MlpParams>(m.params);
            put_i32(out, p.inputs);
            put_i32(out, p.hidden);
            put_i32(out, p.outputs);
            put_f64_vec(out, p.w1);
            put_f64_vec(out, p.b1);
            put_f64_vec(out, p.w2);
            put_f64_vec(out, p.b2);
            break;
        }
        case ModelKind::Gbt: {
            const auto& p = std::get<GbtParams>(m.params);
            put_f64(out, p.shrinkage);
            put_f64_vec(out, p.base);
            put_u32(out, std::uint32_t(p.rounds.size()));
            put_u32(out, p.rounds.empty()
                             ? std::uint32_t(p.base.size())
                             : std::uint32_t(p.rounds[0].size()));
            for (const auto& round : p.rounds)
                for (const RegTree& t : round)
                    put_reg_tree(out, t);
            break;
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open model file for writing: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    f.flush();
    if (!f)
        throw IoError("write failure on model file: " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open model file: " + path);
    std::string data((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    if (f.bad())
        throw IoError("read failure on model file: " + path);

    Reader r{reinterpret_cast<const std::uint8_t*>(data.data()),
             reinterpret_cast<const std::uint8_t*>(data.data()) + data.size()};
    r.need(4);
    if (std::memcmp(r.p, kMagic, 4) != 0)
        throw FormatError("not a model file (bad magic): " + path);
    r.p += 4;
    std::uint16_t version = r.u16();
    if (version != kFormatVersion)
        throw UnsupportedVersionError("model format version " +
                                      std::to_string(version) +
                                      " unsupported; expected " +
                                      std::to_string(kFormatVersion));

    TrainedModel m;
    std::uint8_t kind = r.u8();
    if (kind >= kModelKindCount)
        throw CorruptError("model file has invalid kind tag");
    m.kind = ModelKind(kind);
    std::uint8_t mode = r.u8();
    if (mode > 1)
        throw CorruptError("model file has invalid mode tag");
    m.mode = Mode(mode);
    std::uint32_t n_classes = r.u32();
    if (n_classes == 0 || n_classes > 4096)
        throw CorruptError("model file class count out of range");
    for (std::uint32_t i = 0; i < n_classes; ++i)
        m.class_names.push_back(r.str());
    m.train_seed = r.u64();
    m.scaler_mean = r.f64_vec();
    m.scaler_std = r.f64_vec();
    if (m.scaler_mean.size() != m.scaler_std.size() || m.scaler_mean.empty())
        throw CorruptError("model file scaler is malformed");
    m.final_loss = r.f64();
    m.loss_history = r.f64_vec();

    switch (m.kind) {
        case ModelKind::Dt:
            m.params = read_tree(r);
            break;
        case ModelKind::Rf: {
            std::uint32_t count = r.u32();
            if (count == 0 || count > kMaxVectorLen)
                throw CorruptError("model file forest size out of range");
            ForestParams p;
            for (std::uint32_t i = 0; i < count; ++i)
                p.trees.push_back(read_tree(r));
            m.params = std::move(p);
            break;
        }
        case ModelKind::Svm: {
            std::uint32_t count = r.u32();
            if (count != n_classes)
                throw CorruptError("model file svm class count mismatch");
            SvmParams p;
            for (std::uint32_t i = 0; i < count; ++i)
                p.weights.push_back(r.f64_vec());
            p.bias = r.f64_vec();
            if (p.bias.size() != count)
                throw CorruptError("model file svm bias count mismatch");
            m.params = std::move(p);
            break;
        }
        case ModelKind::Nb: {
            std::uint32_t count = r.u32();
            if (count != n_classes)
                throw CorruptError("model file nb class count mismatch");
            NbParams p;
            for (std::uint32_t i = 0; i < count; ++i) {
                p.mean.push_back(r.f64_vec());
                p.var.push_back(r.f64_vec());
            }
            p.prior = r.f64_vec();
            if (p.prior.size() != count)
                throw CorruptError("model file nb prior count mismatch");
            m.params = std::move(p);
            break;
        }
        case ModelKind::Mlp: {
            MlpParams p;
            p.inputs = r.i32();
            p.hidden = r.i32();
            p.outputs = r.i32();
            if (p.inputs <= 0 || p.hidden <= 0 || p.outputs <= 0)
                throw CorruptError("model file mlp shape is invalid");
            p.w1 = r.f64_vec();
            p.b1 = r.f64_vec();
            p.w2 = r.f64_vec();
            p.b2 = r.f64_vec();
            if (p.w1.size() != std::size_t(p.hidden) * std::size_t(p.inputs) ||
                p.b1.size() != std::size_t(p.hidden) ||
                p.w2.size() != std::size_t(p.outputs) * std::size_t(p.hidden) ||
                p.b2.size() != std::size_t(p.outputs))
                throw CorruptError("model file mlp weight shapes are inconsistent");
            m.params = std::move(p);
            break;
        }
        case ModelKind::Gbt: {
            GbtParams p;
            p.shrinkage = r.f64();
            p.base = r.f64_vec();
            std::uint32_t rounds = r.u32();
            std::uint32_t slots = r.u32();
            if (slots != p.base.size() || rounds > kMaxVectorLen)
                throw CorruptError("model file gbt layout is invalid");
            for (std::uint32_t i = 0; i < rounds; ++i) {
                p.rounds.emplace_back();
                for (std::uint32_t s = 0; s < slots; ++s)
                    p.rounds.back().push_back(read_reg_tree(r));
            }
            m.params = std::move(p);
            break;
        }
    }

    if (r.p != r.end)
        throw CorruptError("model file has trailing bytes");
    return m;
}

}  // namespace mhnt::learn
