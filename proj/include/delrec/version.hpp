#pragma once

namespace delrec {

#ifndef DELREC_GIT_DESCRIBE
#define DELREC_GIT_DESCRIBE "unknown"
#endif

inline constexpr const char* kGitDescribe = DELREC_GIT_DESCRIBE;

}  // namespace delrec
