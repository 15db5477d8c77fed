import asyncio

from app.application.crypto.counters import counter_scope
from app.application.loop.closed_loop import arun_closed_loop
from app.application.selftest import run_selftest
from app.core.audit import FrameAuditChain
from app.core.logging import redact_secrets
from app.core.settings import Settings
from app.infrastructure.transport import duplex_pair
from app.infrastructure.wire import shutdown_frame


async def verify_engine_features():
    print("🔍 Starting Engine Verification...")

    # 1. Reduced operations against the literal full-cipher path
    print("🧮 Running toy-geometry self-test...")
    results = run_selftest(seed=0, trials=10)
    for result in results:
        print(f"✅ {result.name}: {result.passed}")
        assert result.passed, result.detail

    # 2. Frame audit chain over a live channel
    chain = FrameAuditChain()
    adapter, controller = duplex_pair(observer_a=lambda d, f, raw: chain.record(d, f, raw))
    for _ in range(3):
        await adapter.send(shutdown_frame())
        await controller.recv()
    print("🛡️ Verifying frame audit chain integrity...")
    print(f"✅ Audit Chain Valid: {chain.verify()} (head {chain.head[:16]})")
    assert chain.verify() is True

    # 3. Secret redaction in structured log payloads
    redacted = redact_secrets({"sk": [1, 2, 3], "ell": 64})
    print(f"✅ Secret Redaction: {redacted}")
    assert redacted["sk"] == "[REDACTED]"

    # 4. A short encrypted loop, checked against the plaintext twin
    print("🔐 Running 0.5 s of encrypted control...")
    config = Settings(duration_s=0.5, verify=True).simulation()
    with counter_scope() as counters:
        trace = await arun_closed_loop(config)
    print(f"✅ Steps: {len(trace)}, max noise: {trace.max_noise}, audit head: {trace.audit_head[:16]}")
    print(f"   word operations: {counters.word_adds} adds, {counters.word_mults} mults")
    assert len(trace) == 50

    print("\n🎉 All Engine Features Verified Successfully!")

if __name__ == "__main__":
    asyncio.run(verify_engine_features())
