// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qnc/model.hpp"

namespace qnc::emit {

/// Deterministic rendering of the IR as text files. `files` and `manifest`
/// are sorted lexicographically by path; regeneration from the same IR is
/// byte-identical and the manifest digests match the contents.
struct SourceBundle {
    std::vector<std::pair<std::string, std::string>> files;    // path -> text
    std::vector<std::pair<std::string, std::string>> manifest; // path -> sha256
};

/// Hook for tool-specific annotations at the reuse-factor site. The default
/// emits a plain comment so the output stays pragma-free.
struct EmitOptions {
    std::string backend = "none";
    std::function<std::string(const std::string& layer, int reuse,
                              const std::string& backend)>
        pragma_hook;
};

/// Lowers the IR to a net.h / net.c pair in a restricted C subset
/// (fixed-width integers, static constant arrays, literal loop bounds, pure
/// functions) plus the table dumps. Throws ConfigError for minifloat edges
/// (simulation-only in this version) and for formats too wide to lower into
/// 64-bit host integers.
SourceBundle emit_source(const model::TypedIr& ir, const EmitOptions& opts = {});

/// Just the activation-table dump files, path -> text. Empty when the IR has
/// no table-backed activations.
std::map<std::string, std::string> emit_tables(const model::TypedIr& ir);

/// Writes every bundle file plus manifest.json under outdir, creating
/// directories as needed. Throws IoError on filesystem failures.
void write_bundle(const SourceBundle& bundle, const std::filesystem::path& outdir);

} // namespace qnc::emit
