/* Perform the actual call: load any frame-resident arguments, call the
 * callee entry with the new frame address, propagate its error flag, and
 * hand the result to the continuation. Every live temporary was spilled by
 * the planner (the protocol is fully caller-saved), so the continuation
 * receives cleared slots.
 * Parameters: N, LOC0 (new-frame) / LOC1.. (args), POS_*, SPILL.
 * Holes: [ORD_NF], [ORD_ARGi...], ORD_TARGET, [ORD_OUT]. */
#include "holes.h"

CP_DECLARE_TARGET(ORD_TARGET)

#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_NF)
#define CP_NF CP_FRAME_U64(CP_VAL(ORD_NF))
#else
#define CP_NF CP_SLOT(POS_NF)
#endif

#if N >= 1
#if LOC1 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG0)
#define CP_A0 CP_FRAME_U64(CP_VAL(ORD_ARG0))
#else
#define CP_A0 CP_SLOT(POS_ARG0)
#endif
#else
#define CP_A0 0
#endif

#if N >= 2
#if LOC2 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG1)
#define CP_A1 CP_FRAME_U64(CP_VAL(ORD_ARG1))
#else
#define CP_A1 CP_SLOT(POS_ARG1)
#endif
#else
#define CP_A1 0
#endif

#if N >= 3
#if LOC3 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG2)
#define CP_A2 CP_FRAME_U64(CP_VAL(ORD_ARG2))
#else
#define CP_A2 CP_SLOT(POS_ARG2)
#endif
#else
#define CP_A2 0
#endif

#if N >= 4
#if LOC4 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG3)
#define CP_A3 CP_FRAME_U64(CP_VAL(ORD_ARG3))
#else
#define CP_A3 CP_SLOT(POS_ARG3)
#endif
#else
#define CP_A3 0
#endif

#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    CpRet r = CP_TARGET(ORD_TARGET)(CP_NF, CP_A0, CP_A1, CP_A2, CP_A3, 0);
    if (CP_UNWIND_IF(r.e != 0))
        return r;
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = r.v;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_CLOBBERED(0));
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_CLOBBERED(r.v));
#endif
}
