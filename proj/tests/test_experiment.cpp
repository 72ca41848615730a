#include <catch2/catch_amalgamated.hpp>
#include "prising/prising.hpp"
