"""
Market power under a price cap
==============================

One company owning 60% of capacity learns, by tabular Q-learning, what
price to bid in each clearing step while every rival bids its marginal
cost. Its reward is the clearing price. With a high cap it learns to push
prices well above the competitive level; with a cap close to that level
there is little room to do so. A company owning 5% cannot move prices.
"""
from elecmarket.bidding import run_market_power_experiment
from elecmarket.scenario import load_scenario

desk = load_scenario("market_power_desk.yaml")
baseline = None
for learner, cap in (("big", 600.0), ("big", None), ("small", 150.0)):
    if cap is None:
        cap = 2 * baseline
    report = run_market_power_experiment(desk, [learner], cap, episodes=300, seed=0)
    baseline = report.baseline_price
    print(f"learner {learner:<6} cap {cap:6.1f}: final price {report.final_price:7.2f} "
          f"vs competitive {report.baseline_price:6.2f} ({report.price_ratio:.2f}x)")

top = sorted(report.bid_histogram.items(), key=lambda kv: -kv[1])[:3]
print("small learner's most frequent bids:", [(price, n) for price, n in top])
