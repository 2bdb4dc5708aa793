"""Writes the bundled scenes and the cabinet OBJ next to this script.

Run with `python3 scenes/generate.py`.
"""
import json, math, os

HERE = os.path.dirname(os.path.abspath(__file__))
def mat_mul(a,b): return [sum(a[r*4+k]*b[k*4+c] for k in range(4)) for r in range(4) for c in range(4)]
I=[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]
def T(x,y,z): return [1,0,0,x, 0,1,0,y, 0,0,1,z, 0,0,0,1]
def S(x,y,z): return [x,0,0,0, 0,y,0,0, 0,0,z,0, 0,0,0,1]
def R(axis,a):
    c,s=math.cos(a),math.sin(a)
    if axis=='x': return [1,0,0,0, 0,c,-s,0, 0,s,c,0, 0,0,0,1]
    if axis=='y': return [c,0,s,0, 0,1,0,0, -s,0,c,0, 0,0,0,1]
    return [c,-s,0,0, s,c,0,0, 0,0,1,0, 0,0,0,1]
def M(*ms):
    out=I
    for m in ms: out=mat_mul(out,m)
    return [round(v,12)+0.0 for v in out]
def mat(id,albedo,effect,specular=None,emissive=None,shininess=None):
    m={"id":id,"albedo":albedo,"effect":effect}
    if specular: m["specular"]=specular
    if emissive: m["emissive"]=emissive
    if shininess: m["shininess"]=shininess
    return m
def inst(mesh,material,t=None):
    d={"mesh":mesh,"material":material}
    if t is not None: d["transform"]=t
    return d
def point(p,i): return {"kind":"point","position":p,"intensity":i}
def dump(path,scene):
    open(path,'w').write(json.dumps(scene,indent=2)+"\n")

# Cornell box, closed behind the camera. Walls overhang by 0.01 so that
# neighbouring instances overlap instead of meeting edge to edge.
zc=1.3
cornell={
 "meshes":[
  {"name":"long_wall","shape":{"kind":"quad","width":2.02,"depth":4.62}},
  {"name":"end_wall","shape":{"kind":"quad","width":2.02,"depth":2.02}},
  {"name":"tall_block","shape":{"kind":"cuboid","half":[0.3,0.6,0.3]}},
  {"name":"short_block","shape":{"kind":"cuboid","half":[0.3,0.3,0.3]}},
  {"name":"ball","shape":{"kind":"sphere","radius":0.3,"segments":48,"rings":24}},
  {"name":"panel","shape":{"kind":"quad","width":0.8,"depth":0.8}}],
 "instances":[
  inst("long_wall",1,M(T(0,-1,zc))),
  inst("long_wall",1,M(T(0,1,zc),R('x',math.pi))),
  inst("long_wall",2,M(T(-1,0,zc),R('z',-math.pi/2))),
  inst("long_wall",3,M(T(1,0,zc),R('z',math.pi/2))),
  inst("end_wall",1,M(T(0,0,-1),R('x',math.pi/2))),
  inst("end_wall",1,M(T(0,0,3.6),R('x',-math.pi/2))),
  inst("tall_block",5,M(T(-0.4,-0.399,-0.3),R('y',0.3))),
  inst("short_block",5,M(T(0.45,-0.699,0.55),R('y',-0.35))),
  inst("ball",6,M(T(0.35,-0.7,-0.3))),
  inst("panel",4,M(T(-0.35,0.3,-0.99),R('x',math.pi/2)))],
 "materials":[
  mat(1,[0.75,0.75,0.75],"raster_shadows"),
  mat(2,[0.75,0.1,0.1],"raster_shadows"),
  mat(3,[0.1,0.75,0.1],"raster_shadows"),
  mat(4,[0.05,0.05,0.05],"mirror",specular=[0.9,0.9,0.9]),
  mat(5,[0.6,0.6,0.6],"raster",specular=[0.2,0.2,0.2]),
  mat(6,[0.1,0.1,0.1],"mirror",specular=[0.85,0.85,0.85],shininess=64)],
 "lights":[point([0,0.9,0.3],[2.0,2.0,2.0]),point([-0.6,0.5,1.5],[0.8,0.7,0.5])],
 "environment":{"constant":[0.1,0.1,0.15]},
 "camera":{"position":[0,0,3.3],"look_at":[0,0,0],"up":[0,1,0],"fov_y_deg":45,"ipd":0.064}}
dump(os.path.join(HERE,"cornell.json"),cornell)

# Arcade: a room with three cabinets loaded from OBJ.
prof=[(-0.4,0),(0.4,0),(0.4,0.95),(0.1,1.05),(0.05,1.6),(0.25,1.8),(-0.4,1.8)]  # (z, y)
hw=0.4
# Fan center inside the kernel of the concave profile.
CZ,CY=-0.38,1.19
for k in range(len(prof)):
    (az,ay),(bz,by)=prof[k],prof[(k+1)%len(prof)]
    assert (az-CZ)*(by-CY)-(ay-CY)*(bz-CZ)>0, k
lines=["# Arcade cabinet: side profile extruded along x.","o cabinet"]
for sx in (-hw,hw):
    for z,y in prof: lines.append(f"v {sx} {y} {z}")
lines.append(f"v {-hw} {CY} {CZ}")
lines.append(f"v {hw} {CY} {CZ}")
n=len(prof)
# Sides fan from the kernel point.
for k in range(n):
    a,b=k+1,(k+1)%n+1
    lines.append(f"f {2*n+1} {a} {b}")
    lines.append(f"f {2*n+2} {n+b} {n+a}")
# Strips between the sides, one quad per profile edge.
for k in range(n):
    a,b=k+1,(k+1)%n+1
    lines.append(f"f {a} {n+a} {n+b} {b}")
open(os.path.join(HERE,"assets","cabinet.obj"),"w").write("\n".join(lines)+"\n")
ez,ey=(0.05-0.1),(1.6-1.05)
L=math.hypot(ez,ey)
nz,ny=ey/L,-ez/L
theta=math.atan2(nz,ny)
cz,cy=(0.1+0.05)/2+nz*0.004,(1.05+1.6)/2+ny*0.004
arcade={
 "meshes":[
  {"name":"room","shape":{"kind":"cuboid","half":[3,1.5,3]}},
  {"name":"cabinet","obj":"assets/cabinet.obj"},
  {"name":"screen","shape":{"kind":"quad","width":0.6,"depth":L*0.9}},
  {"name":"ball","shape":{"kind":"sphere","radius":0.25,"segments":32,"rings":16}}],
 "instances":[inst("room",1,M(T(0,1.5,0)))]
  +[inst("cabinet",2,M(T(x,0.002,-1.5),R('y',r))) for x,r in ((-1.2,0.25),(0,0),(1.2,-0.25))]
  +[inst("screen",3,M(T(x,0.002,-1.5),R('y',r),T(0,cy,cz),R('x',theta))) for x,r in ((-1.2,0.25),(0,0),(1.2,-0.25))]
  +[inst("ball",4,M(T(0.6,0.25,0.2)))],
 "materials":[
  mat(1,[0.55,0.5,0.6],"raster_shadows"),
  mat(2,[0.15,0.2,0.7],"raster_shadows",specular=[0.3,0.3,0.3]),
  mat(3,[0.05,0.05,0.05],"raster",emissive=[0.4,0.9,0.6]),
  mat(4,[0.05,0.05,0.05],"mirror",specular=[0.9,0.9,0.9])],
 "lights":[point([0,2.8,0],[6,6,6]),point([-2,2.5,1.5],[3,2.5,2])],
 "environment":{"constant":[0.05,0.05,0.08]},
 "camera":{"position":[0,1.6,2.5],"look_at":[0,1.0,-1.5],"up":[0,1,0],"fov_y_deg":55,"ipd":0.064}}
dump(os.path.join(HERE,"arcade-like.json"),arcade)

# Kitchen: dense clutter on a table and a counter, about 50k triangles.
meshes=[
 {"name":"room","shape":{"kind":"cuboid","half":[3,1.4,3]}},
 {"name":"counter","shape":{"kind":"cuboid","half":[2.6,0.45,0.3]}},
 {"name":"table_top","shape":{"kind":"cuboid","half":[0.9,0.03,0.6]}},
 {"name":"leg","shape":{"kind":"cylinder","radius":0.04,"height":0.72,"segments":24}},
 {"name":"fruit","shape":{"kind":"sphere","radius":0.06,"segments":40,"rings":20}},
 {"name":"plate","shape":{"kind":"torus","major":0.12,"minor":0.012,"segments":64,"sides":12}},
 {"name":"plate_base","shape":{"kind":"cylinder","radius":0.12,"height":0.01,"segments":48}},
 {"name":"cup","shape":{"kind":"cylinder","radius":0.04,"height":0.1,"segments":32}},
 {"name":"pot","shape":{"kind":"sphere","radius":0.22,"segments":96,"rings":48}},
 {"name":"bowl","shape":{"kind":"torus","major":0.2,"minor":0.03,"segments":96,"sides":24}}]
insts=[inst("room",1,M(T(0,1.4,0))), inst("counter",2,M(T(0,0.452,-2.69)))]
insts.append(inst("table_top",3,M(T(0,0.75,0))))
for x in (-0.8,0.8):
    for z in (-0.5,0.5): insts.append(inst("leg",3,M(T(x,0.361,z))))
# Objects rest 1 mm above the surfaces under them so no faces are coplanar.
top=0.781
for i,(x,z) in enumerate([(-0.5,-0.3),(0,-0.35),(0.5,-0.3),(-0.5,0.3),(0,0.35),(0.5,0.3)]):
    insts.append(inst("plate_base",5,M(T(x,top+0.005,z))))
    insts.append(inst("plate",5,M(T(x,top+0.012,z))))
    insts.append(inst("cup",6,M(T(x+0.2,top+0.05,z))))
insts.append(inst("bowl",7,M(T(0,top+0.03,0))))
k=0
for ring,(r,y) in enumerate([(0.1,0.07),(0.05,0.16)]):
    cnt=6 if ring==0 else 3
    for j in range(cnt):
        a=2*math.pi*j/cnt+ring*0.5
        insts.append(inst("fruit",8 if (k%2==0) else 9,M(T(r*math.cos(a),top+y,r*math.sin(a)))))
        k+=1
for x in (-1.6,-0.9):
    insts.append(inst("pot",10,M(T(x,0.903+0.22,-2.6))))
for j in range(8):
    insts.append(inst("fruit",8+j%2,M(T(1.0+0.13*j,0.963,-2.55))))
for j in range(6):
    insts.append(inst("cup",6,M(T(-2.3+0.12*j,0.953,-2.75))))
kitchen={
 "meshes":meshes,"instances":insts,
 "materials":[
  mat(1,[0.8,0.78,0.72],"raster_shadows"),
  mat(2,[0.5,0.35,0.2],"raster_shadows",specular=[0.2,0.2,0.2]),
  mat(3,[0.45,0.3,0.15],"raster_shadows",specular=[0.1,0.1,0.1]),
  mat(5,[0.85,0.85,0.85],"raster",specular=[0.1,0.1,0.1]),
  mat(6,[0.7,0.2,0.15],"raster_shadows"),
  mat(7,[0.2,0.4,0.7],"raster_shadows",specular=[0.3,0.3,0.3]),
  mat(8,[0.8,0.6,0.05],"raster"),
  mat(9,[0.6,0.05,0.05],"raster",specular=[0.2,0.2,0.2]),
  mat(10,[0.05,0.05,0.05],"mirror",specular=[0.85,0.85,0.85])],
 "lights":[point([0,2.6,0],[5,4.8,4.4]),point([-1.5,2.4,-2.0],[2,2,2]),point([2.0,2.2,1.5],[1.5,1.6,2.0])],
 "environment":{"constant":[0.1,0.1,0.1]},
 "camera":{"position":[0,1.7,2.6],"look_at":[0,0.7,-0.8],"up":[0,1,0],"fov_y_deg":55,"ipd":0.064}}
dump(os.path.join(HERE,"kitchen.json"),kitchen)
