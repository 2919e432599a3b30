#pragma once

#include "taserial/checker.hpp"
#include "taserial/config.hpp"
#include "taserial/controller.hpp"
#include "taserial/dsl.hpp"
#include "taserial/engine.hpp"
#include "taserial/errors.hpp"
#include "taserial/eval.hpp"
#include "taserial/fuzz.hpp"
#include "taserial/interp.hpp"
#include "taserial/locks.hpp"
#include "taserial/machine.hpp"
#include "taserial/manifest.hpp"
#include "taserial/rwloc.hpp"
#include "taserial/state.hpp"
#include "taserial/syntax.hpp"
#include "taserial/trace.hpp"
#include "taserial/value.hpp"
#include "taserial/wrapper.hpp"
