#ifndef SPAMISS_VERSION_HPP
#define SPAMISS_VERSION_HPP

namespace spamiss {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
