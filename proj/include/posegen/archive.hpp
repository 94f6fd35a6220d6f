#pragma once

/// \file archive.hpp
/// \brief Single-file named-tensor archive (torch.save-compatible dict).
///
/// A file holds one flat dictionary mapping names to tensors or to string
/// metadata, so archives written here load in Python with `torch.load` and
/// dictionaries saved from Python load here.

#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

namespace posegen {

struct TensorArchive {
    std::map<std::string, torch::Tensor> tensors;
    std::map<std::string, std::string> meta;
};

/// Writes atomically (temporary file, then rename).
void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

/// Copies module parameters and buffers into the archive under `prefix`.
void export_module(const torch::nn::Module& module, const std::string& prefix, TensorArchive& archive);
/// Copies `prefix`-named tensors back into the module; every parameter must be present.
void import_module(torch::nn::Module& module, const std::string& prefix, const TensorArchive& archive);

}  // namespace posegen
