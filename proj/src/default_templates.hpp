#pragma once

// Generated from templates/*.txt at configure time.
namespace ambidoc::prompt::detail {

extern const char* const kDefaultSystem;
extern const char* const kDefaultUser;
extern const char* const kDefaultColumnSelection;
extern const char* const kDefaultCot;

}  // namespace ambidoc::prompt::detail
