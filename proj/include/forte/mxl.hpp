#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace forte {

// Minimal ZIP reader for compressed MusicXML (.mxl) containers.
// Supports stored and deflated entries, no zip64, no encryption.

bool looks_like_zip(std::string_view bytes);

std::vector<std::string> zip_entry_names(std::string_view bytes);

// Extract one entry by exact name. Throws FormatError when missing/corrupt.
std::string zip_extract(std::string_view bytes, const std::string& name);

// Return the root MusicXML document of an .mxl container, located via
// META-INF/container.xml (falling back to the first top-level .xml entry).
std::string mxl_root_document(std::string_view bytes);

}  // namespace forte
