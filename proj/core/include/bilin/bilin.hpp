#pragma once

#include "bilin/errors.hpp"
#include "bilin/hankel.hpp"
#include "bilin/io.hpp"
#include "bilin/markov.hpp"
#include "bilin/narx.hpp"
#include "bilin/pipeline.hpp"
#include "bilin/system.hpp"
