/* Compute the callee frame address: the caller's frame plus its own
 * (charged) frame size. The address is a temporary protected across the
 * argument evaluation by pass-through parameters.
 * Parameters: PT, SPILL. Holes: ORD_FRAMESIZE, [ORD_OUT]. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_FRAMESIZE)
#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t nf = cp_f + CP_VAL(ORD_FRAMESIZE);
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = nf;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_OUT(nf));
#endif
}
