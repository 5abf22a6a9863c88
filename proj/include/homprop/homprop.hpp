#pragma once

#include "homprop/bloch.hpp"
#include "homprop/covering_space.hpp"
#include "homprop/group_algebra.hpp"
#include "homprop/io.hpp"
#include "homprop/jacobi.hpp"
#include "homprop/propagator.hpp"
#include "homprop/wavepacket.hpp"
