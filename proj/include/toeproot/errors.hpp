#pragma once

#include <stdexcept>
#include <string>

namespace toeproot {

/// Failure categories. Every throw site in the library uses exactly one of
/// these; the CLI serializes the category name into its structured error JSON.
enum class errc {
    positivity,          ///< a Gamma-quotient parameter would be <= 0
    properness,          ///< rational Mellin data is not strictly proper
    unsupported_symbol,  ///< symbol outside the supported class (complex roots, bad configuration)
    accuracy,            ///< a numerical routine could not reach its tolerance
    range                ///< argument outside the valid domain (poles, grid hull, bad sizes)
};

inline const char* to_string(errc c) noexcept {
    switch (c) {
        case errc::positivity: return "positivity";
        case errc::properness: return "properness";
        case errc::unsupported_symbol: return "unsupported-symbol";
        case errc::accuracy: return "accuracy";
        case errc::range: return "range";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    errc category() const noexcept { return category_; }

private:
    errc category_;
};

[[noreturn]] inline void fail(errc category, const std::string& message) {
    throw error(category, message);
}

}  // namespace toeproot
