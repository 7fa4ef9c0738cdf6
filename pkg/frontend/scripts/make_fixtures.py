"""Build the round-trip fixtures: trained checkpoint, store, doc page."""

import json
import sys
from pathlib import Path

out = Path(sys.argv[1])
repo = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(repo / "tests"))

from synth import valve_kb_records, valve_pairs  # noqa: E402

from stdqa.kb import KbStore  # noqa: E402
from stdqa.simnet import SimModelConfig, save_sim_checkpoint, train_sim  # noqa: E402

pairs, tokenizer = valve_pairs()
config = SimModelConfig(
    vocab_size=tokenizer.vocab.size, embed_dim=16, hidden_dim=16, max_len=24, seed=5
)
model, _ = train_sim(pairs, config, epochs=12, batch_size=4, lr=1e-2, tokenizer=tokenizer)
save_sim_checkpoint(out / "sim.ckpt", model)

records = out / "records.json"
records.write_text(json.dumps(valve_kb_records(), ensure_ascii=False), encoding="utf-8")
store = KbStore(out / "kb")
store.import_json(records)

docs = out / "docs"
docs.mkdir(exist_ok=True)
(docs / "JB4732.html").write_text(
    "<html><body><h1 id='E.6.3'>E.6.3 排放面积</h1></body></html>", encoding="utf-8"
)
print("round-trip fixtures ready")
