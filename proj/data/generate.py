#!/usr/bin/env python3
# Copyright 2026 The metasolve Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Regenerates the bundled instances. The small CVRP optima in
# cvrp-small/best_known.csv come from exact subset enumeration.
import random, math, itertools, os
from functools import lru_cache
root=os.path.dirname(os.path.abspath(__file__))
def nint(x): return int(x+0.5)
def d(a,b): return nint(math.hypot(a[0]-b[0],a[1]-b[1]))
def write(path,name,comment,pts,dem,Q,k=None):
    with open(path,'w') as f:
        f.write(f"NAME : {name}\nCOMMENT : {comment}\nTYPE : CVRP\nDIMENSION : {len(pts)}\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : {Q}\n")
        if k: f.write(f"VEHICLES : {k}\n")
        f.write("NODE_COORD_SECTION\n")
        for i,p in enumerate(pts): f.write(f"{i+1} {p[0]} {p[1]}\n")
        f.write("DEMAND_SECTION\n")
        for i,q in enumerate(dem): f.write(f"{i+1} {q}\n")
        f.write("DEPOT_SECTION\n1\n-1\nEOF\n")
def tsp_cost(pts, nodes):
    # Held-Karp from depot 0 over nodes
    nodes=list(nodes)
    if not nodes: return 0
    n=len(nodes); INF=10**18
    dp={}
    for i in range(n): dp[(1<<i,i)]=d(pts[0],pts[nodes[i]])
    for m in range(1,1<<n):
        for i in range(n):
            if (m,i) not in dp: continue
            for j in range(n):
                if m>>j&1: continue
                key=(m|1<<j,j); v=dp[(m,i)]+d(pts[nodes[i]],pts[nodes[j]])
                if v<dp.get(key,INF): dp[key]=v
    full=(1<<n)-1
    return min(dp[(full,i)]+d(pts[nodes[i]],pts[0]) for i in range(n))
def optimum(pts,dem,Q,k):
    n=len(pts)-1
    cost={}
    for m in range(1,1<<n):
        sub=[i+1 for i in range(n) if m>>i&1]
        if sum(dem[i] for i in sub)<=Q: cost[m]=tsp_cost(pts,sub)
    full=(1<<n)-1
    @lru_cache(None)
    def best(m,r):
        if m==0: return 0
        if r==0: return math.inf
        low=m&-m; res=math.inf
        s=m
        while s:
            if s&low and s in cost: res=min(res,cost[s]+best(m^s,r-1))
            s=(s-1)&m
        return res
    return best(full,k)
os.makedirs(f'{root}/cvrp-small',exist_ok=True)
rng=random.Random(20260315)
best=[]
for idx,(n,Q,k) in enumerate([(8,30,3),(9,40,3)]):
    pts=[(50,50)]+[(rng.randint(0,100),rng.randint(0,100)) for _ in range(n)]
    dem=[0]+[rng.randint(3,14) for _ in range(n)]
    assert sum(dem)<=Q*k
    name=f"S-n{n+1}-k{k}"
    write(f'{root}/cvrp-small/{name}.vrp',name,"small synthetic instance",pts,dem,Q)
    best.append((name,optimum(pts,dem,Q,k)))
with open(f'{root}/cvrp-small/best_known.csv','w') as f:
    f.write("instance,best_known\n")
    for nm,c in best: f.write(f"{nm},{c}\n")
print(best)
# P-n16-k8
os.makedirs(f'{root}/cvrp',exist_ok=True)
pts=[(30,40)]+[tuple(map(int,s.split())) for s in "37 52,49 49,52 64,31 62,52 33,42 41,52 41,57 58,62 42,42 57,27 68,43 67,58 48,58 27,37 69".split(',')]
dem=[0,19,30,16,23,11,31,15,28,8,8,7,14,6,19,11]
write(f'{root}/cvrp/P-n16-k8.vrp','P-n16-k8','16 nodes, 8 vehicles',pts,dem,35)
# synthetic n=60
rng=random.Random(777)
n=59
pts=[(50,50)]+[(rng.randint(0,100),rng.randint(0,100)) for _ in range(n)]
dem=[0]+[rng.randint(1,20) for _ in range(n)]
Q=100; k=math.ceil(sum(dem)/Q)+1
name=f"X-n60-k{k}"
os.makedirs(f'{root}/cvrp-large',exist_ok=True)
write(f'{root}/cvrp-large/{name}.vrp',name,"synthetic uniform instance",pts,dem,Q)
print(name)
os.makedirs(f'{root}/tsp',exist_ok=True)
with open(f'{root}/tsp/square.tsp','w') as f:
    f.write("NAME : square\nCOMMENT : corners of a 10x10 square\nTYPE : TSP\nDIMENSION : 4\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 10 0\n3 10 10\n4 0 10\nEOF\n")
