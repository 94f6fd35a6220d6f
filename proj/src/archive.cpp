#include "posegen/archive.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

namespace posegen {

namespace fs = std::filesystem;

void save_archive(const fs::path& path, const TensorArchive& archive) {
    c10::impl::GenericDict dict(c10::StringType::get(), c10::AnyType::get());
    for (const auto& [k, t] : archive.tensors) dict.insert(k, t.detach().contiguous());
    for (const auto& [k, v] : archive.meta) {
        if (archive.tensors.count(k)) throw std::invalid_argument("archive key used twice: " + k);
        dict.insert(k, v);
    }
    const std::vector<char> bytes = torch::pickle_save(c10::IValue(dict));

    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

TensorArchive load_archive(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open archive " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    c10::IValue value;
    try {
        value = torch::pickle_load(bytes);
    } catch (const c10::Error& e) {
        throw std::runtime_error("not a tensor archive: " + path.string());
    }
    if (!value.isGenericDict()) throw std::runtime_error("archive is not a dictionary: " + path.string());

    TensorArchive out;
    for (const auto& entry : value.toGenericDict()) {
        if (!entry.key().isString()) throw std::runtime_error("archive has a non-string key");
        const std::string key = entry.key().toStringRef();
        if (entry.value().isTensor()) out.tensors[key] = entry.value().toTensor();
        else if (entry.value().isString()) out.meta[key] = entry.value().toStringRef();
        else throw std::runtime_error("archive entry '" + key + "' is neither tensor nor string");
    }
    return out;
}

void export_module(const torch::nn::Module& module, const std::string& prefix, TensorArchive& archive) {
    for (const auto& p : module.named_parameters()) archive.tensors[prefix + p.key()] = p.value().detach().clone();
    for (const auto& b : module.named_buffers()) archive.tensors[prefix + b.key()] = b.value().detach().clone();
}

void import_module(torch::nn::Module& module, const std::string& prefix, const TensorArchive& archive) {
    torch::NoGradGuard no_grad;
    auto copy = [&](const std::string& name, torch::Tensor& dst) {
        auto it = archive.tensors.find(prefix + name);
        if (it == archive.tensors.end()) throw std::runtime_error("archive is missing tensor '" + prefix + name + "'");
        if (it->second.sizes() != dst.sizes())
            throw std::runtime_error("shape mismatch for tensor '" + prefix + name + "'");
        dst.copy_(it->second);
    };
    for (auto& p : module.named_parameters()) copy(p.key(), p.value());
    for (auto& b : module.named_buffers()) copy(b.key(), b.value());
}

}  // namespace posegen
